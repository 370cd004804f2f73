"""Audit a made-up landings record against the sea bass yield threshold.

Writes a small series to a temporary directory and runs the same code
path as ``viakern check-series``. Years above the threshold prove the
catch was not sustainable; staying below proves nothing.
"""
import tempfile
from importlib.resources import files
from pathlib import Path

from viakern import cli
from viakern.io import ObservedSeries, write_series

landings = {1988: 9000, 1989: 12500, 1990: 14800, 1991: 16900, 1992: 20000, 1993: 13000, 1994: 11000}

data = files("viakern") / "data"
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "landings.csv"
    path.write_text(write_series(ObservedSeries(tuple(landings), tuple(float(v) for v in landings.values()))))
    code = cli.main([
        "check-series",
        "--species-scalars", str(data / "seabass_scalars.txt"),
        "--species-ages", str(data / "seabass_ages.csv"),
        "--series", str(path), "--out", tmp, "--svg",
    ])
    print(f"exit code {code}")
    print((Path(tmp) / "audit.tsv").read_text())
