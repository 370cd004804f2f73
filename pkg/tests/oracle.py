"""Independent grid oracle for 1-D monotone toys.

The viable set of a monotone system with upper-set constraints is itself an
upper set, which makes two roundings of a backward grid iteration sound:

* inner: controls restricted to a finite grid, successors rounded *down* to
  the grid (clamped to the top point). The greatest fixed point only
  contains true kernel points.
* outer: each control cell ``[u_k, u_k+1]`` is judged with its most
  favourable indicator value and successor ``G(x, u_k)``, successors rounded
  *up*, and escaping the box counts as viable. Every iterate contains the
  true kernel, so absence after any number of steps is a proof of
  non-membership.

A grid point is decided when both agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Dyn = Callable[[float, float], float]
Ind = Callable[[float, float], float]


@dataclass(frozen=True)
class OracleResult:
    xs: np.ndarray
    inner: np.ndarray  # bool: certainly in the kernel
    outer: np.ndarray  # bool: possibly in the kernel

    @property
    def decided(self) -> np.ndarray:
        return self.inner == self.outer

    @property
    def member(self) -> np.ndarray:
        return self.inner

    def nonempty(self) -> bool | None:
        """Kernel meets the grid box: True, False, or None when the grids disagree."""
        if self.inner.any():
            return True
        if not self.outer.any():
            return False
        return None


def grid_oracle(
    G: Dyn,
    indicators: Sequence[tuple[Ind, float]],
    u_bounds: tuple[float, float],
    xs: np.ndarray,
    controls: int = 64,
    outer_steps: int = 200,
) -> OracleResult:
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    h = xs[1] - xs[0]
    us = np.linspace(u_bounds[0], u_bounds[1], controls)

    def idx_floor(y):
        return min(n - 1, int(math.floor((y - xs[0]) / h)))

    def idx_ceil(y):
        return int(math.ceil((y - xs[0]) / h))

    # inner: greatest fixed point with grid controls, floor rounding
    inner_succ = []
    for x in xs:
        opts = []
        for u in us:
            if all(f(x, u) >= thr for f, thr in indicators):
                j = idx_floor(G(x, u))
                if j >= 0:
                    opts.append(j)
        inner_succ.append(opts)
    inner = np.ones(n, dtype=bool)
    while True:
        nxt = np.array([any(inner[j] for j in opts) for opts in inner_succ])
        if np.array_equal(nxt, inner):
            break
        inner = nxt

    # outer: favourable cell evaluation, ceil rounding, escape counts as viable
    outer_succ = []
    for x in xs:
        opts = []
        for a, b in zip(us[:-1], us[1:]):
            if all(max(f(x, a), f(x, b)) >= thr for f, thr in indicators):
                opts.append(idx_ceil(G(x, a)))
        outer_succ.append(opts)
    outer = np.ones(n, dtype=bool)
    for _ in range(outer_steps):
        nxt = np.array([any(j >= n or (j >= 0 and outer[j]) for j in opts) for opts in outer_succ])
        if np.array_equal(nxt, outer):
            break
        outer = nxt
    return OracleResult(xs, inner, outer)
