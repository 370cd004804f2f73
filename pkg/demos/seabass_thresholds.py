"""Sustainable thresholds for the Chilean sea bass stock.

Loads the bundled parameter files, prints the largest yield and spawning
biomass that can be sustained forever, and shows what happens when the
stock is fished at maximum effort from its unfished equilibrium.

    python demos/seabass_thresholds.py
"""
from importlib.resources import files

from viakern import ageclass as ac
from viakern.io import load_species

data = files("viakern") / "data"
p = load_species(data / "seabass_scalars.txt", data / "seabass_ages.csv")
rep = ac.thresholds(p)

print(f"max sustainable yield    {rep.max_yield:10.0f} t")
print(f"max sustainable SSB      {rep.max_ssb:10.0f} t")
print(f"contraction constant     {rep.phi_g:10.4f}")

# Fishing at lambda_max from the unfished state: the first catch equals the
# yield threshold, then the stock runs down toward the fished equilibrium.
N = ac.equilibrium(p, p.lambda_min)
for year in range(8):
    print(f"year {year}: ssb {ac.to_tons(ac.ssb(p, N)):8.0f} t   "
          f"catch {ac.to_tons(ac.yield_biomass(p, N, p.lambda_max)):8.0f} t")
    N = ac.step(p, N, p.lambda_max)

fished = ac.equilibrium(p, p.lambda_max)
print(f"fished equilibrium catch {ac.to_tons(ac.yield_biomass(p, fished, p.lambda_max)):.0f} t")
