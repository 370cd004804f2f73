"""Alfonsino thresholds under each two-sex coupling convention.

The stock is split into males and females sharing one Beverton-Holt
recruitment. How spawning biomass is counted and how recruits are split
between the sexes changes the thresholds; the bundled parameter file uses
the convention that reproduces the published figures.
"""
from importlib.resources import files

from viakern import ageclass as ac
from viakern.io import load_species

REFERENCE = (16158.0, 52373.0)

data = files("viakern") / "data"
tp = load_species(data / "alfonsino_scalars.txt", data / "alfonsino_ages.csv")

print(f"{'convention':44s}{'yield t':>10s}{'ssb t':>10s}{'phi_G':>8s}")
for rep in ac.convention_table(tp):
    dy = rep.max_yield / REFERENCE[0] - 1
    ds = rep.max_ssb / REFERENCE[1] - 1
    print(f"{rep.convention:44s}{rep.max_yield:10.0f}{rep.max_ssb:10.0f}{rep.phi_g:8.3f}"
          f"   ({dy:+.1%}, {ds:+.1%})")
print(f"file convention: {tp.convention}")
