"""Componentwise orders, monotone dynamics and acceptable sets.

States and controls are plain 1-D ``numpy`` float arrays. Comparisons are
exact: no tolerance is ever added to an order or threshold test.

Flat/sharp naming follows the control bound, not the direction of the
resulting dynamics: ``flat`` is ``G(., u_flat)`` with the *lowest* control,
which dominates every controlled transition (the upper dynamics), while
``sharp`` is ``G(., u_sharp)``, the lower dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

ArrayLike = Sequence[float] | np.ndarray | float


class Direction(str, Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


class Classification(str, Enum):
    PRODUCTION = "production"
    PRESERVATION = "preservation"
    MIXED = "mixed"


def as_state(values: ArrayLike, dim: int | None = None) -> np.ndarray:
    """Validate and copy ``values`` into a nonnegative float state vector."""
    x = np.array(values, dtype=float).reshape(-1)
    if dim is not None and x.size != dim:
        raise ValueError(f"state has dimension {x.size}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("state has non-finite components")
    if np.any(x < 0):
        raise ValueError("state has negative components")
    return x


def as_control(values: ArrayLike) -> np.ndarray:
    u = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(u)):
        raise ValueError("control has non-finite components")
    return u


def leq(a: ArrayLike, b: ArrayLike) -> bool:
    """Componentwise ``a <= b``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return bool(np.all(a <= b))


@dataclass(frozen=True)
class ControlBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = as_control(self.lower), as_control(self.upper)
        if lo.shape != hi.shape:
            raise ValueError("control bounds have different dimensions")
        if np.any(lo > hi):
            raise ValueError("lower control bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, u: ArrayLike) -> bool:
        u = as_control(u)
        return bool(np.all(self.lower <= u) and np.all(u <= self.upper))


@dataclass(frozen=True)
class MonotoneDynamics:
    """A control map ``G(x, u)`` declared increasing in ``x`` and decreasing in ``u``.

    The declaration is a hypothesis of the caller; :func:`check_monotonicity`
    probes it by sampling.
    """

    map: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bounds: ControlBounds
    state_dim: int
    increasing_in_state: bool = True
    decreasing_in_control: bool = True
    name: str = "G"

    def __call__(self, x: ArrayLike, u: ArrayLike) -> np.ndarray:
        return np.asarray(self.map(np.asarray(x, dtype=float), as_control(u)), dtype=float)

    @property
    def flat(self) -> Callable[[np.ndarray], np.ndarray]:
        """Upper dynamics without control, ``x -> G(x, u_flat)``."""
        return fixed_control_dynamics(self, "flat")

    @property
    def sharp(self) -> Callable[[np.ndarray], np.ndarray]:
        """Lower dynamics without control, ``x -> G(x, u_sharp)``."""
        return fixed_control_dynamics(self, "sharp")


def fixed_control_dynamics(g: MonotoneDynamics, which: str) -> Callable[[np.ndarray], np.ndarray]:
    """Freeze the control of ``g`` at one of its bounds.

    ``which="flat"`` freezes at the lower control bound and gives the *upper*
    dynamics; ``which="sharp"`` freezes at the upper bound and gives the
    *lower* dynamics. ``"lower"``/``"upper"`` are accepted as aliases naming
    the control bound.
    """
    key = {"flat": "flat", "lower": "flat", "sharp": "sharp", "upper": "sharp"}.get(which)
    if key is None:
        raise ValueError(f"unknown control bound {which!r}")
    u = g.bounds.lower if key == "flat" else g.bounds.upper

    def frozen(x: ArrayLike) -> np.ndarray:
        return g(x, u)

    frozen.__name__ = f"{g.name}_{key}"
    return frozen


@dataclass(frozen=True)
class Indicator:
    """One constraint ``func(x, u) >= threshold``.

    ``state_lipschitz`` is an optional L1 Lipschitz bound of ``func`` in the
    state; viability uses it to certify that a ball around a steady state
    stays inside the constraint.
    """

    func: Callable[[np.ndarray, np.ndarray], float]
    threshold: float
    control_direction: Direction
    state_direction: Direction = Direction.INCREASING
    state_lipschitz: float | None = None
    name: str = "L"

    def __post_init__(self):
        object.__setattr__(self, "control_direction", Direction(self.control_direction))
        object.__setattr__(self, "state_direction", Direction(self.state_direction))
        if self.state_direction is not Direction.INCREASING:
            raise ValueError("indicators must be increasing in the state")

    def value(self, x: ArrayLike, u: ArrayLike) -> float:
        return float(self.func(np.asarray(x, dtype=float), as_control(u)))

    def slack(self, x: ArrayLike, u: ArrayLike) -> float:
        return self.value(x, u) - self.threshold

    def holds(self, x: ArrayLike, u: ArrayLike) -> bool:
        return self.value(x, u) >= self.threshold


@dataclass(frozen=True)
class IndicatorSet:
    indicators: tuple[Indicator, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "indicators", tuple(self.indicators))

    @property
    def classification(self) -> Classification:
        dirs = {ind.control_direction for ind in self.indicators}
        if dirs <= {Direction.INCREASING}:
            return Classification.PRODUCTION
        if dirs == {Direction.DECREASING}:
            return Classification.PRESERVATION
        return Classification.MIXED

    def contains(self, x: ArrayLike, u: ArrayLike) -> bool:
        return all(ind.holds(x, u) for ind in self.indicators)

    def values(self, x: ArrayLike, u: ArrayLike) -> list[float]:
        return [ind.value(x, u) for ind in self.indicators]

    def with_thresholds(self, thresholds: Sequence[float]) -> "IndicatorSet":
        if len(thresholds) != len(self.indicators):
            raise ValueError("one threshold per indicator is required")
        return IndicatorSet(tuple(
            Indicator(ind.func, float(t), ind.control_direction, ind.state_direction,
                      ind.state_lipschitz, ind.name)
            for ind, t in zip(self.indicators, thresholds)
        ))


def contains(d: IndicatorSet, x: ArrayLike, u: ArrayLike) -> bool:
    return d.contains(x, u)


def state_slice(d: IndicatorSet, u_fixed: ArrayLike) -> Callable[[np.ndarray], bool]:
    """Predicate ``x -> (x, u_fixed) in d``.

    For a production set the slice at the upper control bound is the whole
    state projection of ``d``; for a preservation set the slice at the lower
    bound is.
    """
    u = as_control(u_fixed)

    def pred(x: ArrayLike) -> bool:
        return d.contains(x, u)

    return pred


@dataclass
class MonotonicityReport:
    samples: int
    state_violations: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    control_violations: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    sandwich_violations: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.state_violations) + len(self.control_violations) + len(self.sandwich_violations)

    @property
    def ok(self) -> bool:
        return self.total == 0


def _ordered_pair(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray):
    a = rng.uniform(lo, hi)
    b = a + rng.uniform(0.0, 1.0, size=a.shape) * (hi - a)
    return a, np.minimum(b, hi)


def check_monotonicity(
    g: MonotoneDynamics,
    sample_count: int,
    seed: int,
    domain_box: tuple[ArrayLike, ArrayLike],
) -> MonotonicityReport:
    """Randomized falsification of the monotone-dynamics declaration.

    Each sample draws ordered pairs ``x <= x'`` in ``domain_box`` and
    ``u <= u'`` in the control bounds, then checks ``G(x', u) >= G(x, u)``,
    ``G(x, u') <= G(x, u)`` and ``G_sharp(x) <= G(x, u) <= G_flat(x)``.
    """
    lo = np.asarray(domain_box[0], dtype=float).reshape(-1)
    hi = np.asarray(domain_box[1], dtype=float).reshape(-1)
    if lo.size != g.state_dim or hi.size != g.state_dim:
        raise ValueError("domain box does not match the state dimension")
    if np.any(lo > hi):
        raise ValueError("domain box lower corner exceeds upper corner")
    rng = np.random.default_rng(seed)
    ulo, uhi = g.bounds.lower, g.bounds.upper
    report = MonotonicityReport(samples=sample_count)
    for _ in range(sample_count):
        x, x2 = _ordered_pair(rng, lo, hi)
        u, u2 = _ordered_pair(rng, ulo, uhi)
        gxu = g(x, u)
        if not np.all(g(x2, u) >= gxu):
            report.state_violations.append((x, x2, u))
        if not np.all(g(x, u2) <= gxu):
            report.control_violations.append((x, u, u2))
        if not (np.all(g(x, uhi) <= gxu) and np.all(gxu <= g(x, ulo))):
            report.sandwich_violations.append((x, u))
    return report


def check_indicator_directions(
    d: IndicatorSet,
    bounds: ControlBounds,
    sample_count: int,
    seed: int,
    domain_box: tuple[ArrayLike, ArrayLike],
) -> list[tuple[str, str]]:
    """Return ``(indicator name, "state"|"control")`` for each sampled direction violation."""
    lo = np.asarray(domain_box[0], dtype=float).reshape(-1)
    hi = np.asarray(domain_box[1], dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(sample_count):
        x, x2 = _ordered_pair(rng, lo, hi)
        u, u2 = _ordered_pair(rng, bounds.lower, bounds.upper)
        for ind in d.indicators:
            v = ind.value(x, u)
            if ind.value(x2, u) < v:
                bad.append((ind.name, "state"))
            w = ind.value(x, u2)
            if ind.control_direction is Direction.INCREASING and w < v:
                bad.append((ind.name, "control"))
            if ind.control_direction is Direction.DECREASING and w > v:
                bad.append((ind.name, "control"))
    return bad
