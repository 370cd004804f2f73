"""Lower and upper kernel estimates on two one-dimensional toys.

Production toy: x' = x exp(0.1 - u), u in [0, 0.3], with x >= 1 and
u x >= 0.05. The lower estimate is empty, the upper one is x >= 1.

Preservation toy: x' = 2 exp(-u) x / (1 + x), u in [0, 0.5], with x >= 0.8
and u <= 0.1. Here both estimates coincide.
"""
import numpy as np

from viakern import KernelQueryConfig, estimate_membership, parse_toy

prod = parse_toy(["x*exp(0.1-u)"], (0.0, 0.3), ["x>=1", "u*x>=0.05"])
pres = parse_toy(["2*exp(-u)*(x/(1+x))"], (0.0, 0.5), ["x>=0.8", "-u>=-0.1"])
pres_cfg = KernelQueryConfig(steady_state=[1.0], contraction_constant=1 / 1.8)


def row(toy, cfg, x):
    v = estimate_membership(toy.dynamics, toy.constraints, [x], cfg)
    upper = "?" if v.upper_member is None else str(v.upper_member)
    return f"{str(v.lower_member):>6s} {upper:>6s} {v.conclusion.value:>14s}"


print(f"{'x':>5s} | {'production':^28s} | {'preservation':^28s}")
for x in np.linspace(0.0, 3.0, 13):
    print(f"{x:5.2f} | {row(prod, KernelQueryConfig(), x)} | {row(pres, pres_cfg, x)}")
