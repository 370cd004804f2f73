import math
from importlib.resources import files

import numpy as np
import pytest

from viakern import io, parse_toy

DATA = files("viakern") / "data"
SEABASS = (DATA / "seabass_scalars.txt", DATA / "seabass_ages.csv")
ALFONSINO = (DATA / "alfonsino_scalars.txt", DATA / "alfonsino_ages.csv")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def seabass():
    return io.load_species(*SEABASS)


@pytest.fixture(scope="session")
def alfonsino():
    return io.load_species(*ALFONSINO)


# production toy: G = x exp(0.1 - u), u in [0, 0.3], D = {x >= 1, u x >= 0.05}
PROD_BOUNDS = (0.0, 0.3)


def prod_G(x, u):
    return x * math.exp(0.1 - u)


def production_toy():
    return parse_toy(["x*exp(0.1-u)"], PROD_BOUNDS, ["x>=1", "u*x>=0.05"])


# preservation toy: G = exp(-u) 2x/(1+x), u in [0, 0.5], D = {x >= b, -u >= -f}
PRES_BOUNDS = (0.0, 0.5)


def pres_G(x, u):
    return math.exp(-u) * 2 * x / (1 + x)


def preservation_toy(b=0.8, f=0.1):
    return parse_toy(["2*exp(-u)*(x/(1+x))"], PRES_BOUNDS, [f"x>={b!r}", f"-u>={-f!r}"])


def pres_contraction(b):
    # |G(x,0) - 1| / |x - 1| = 1 / (1 + x) on {x >= b}
    return 1.0 / (1.0 + b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
