"""Viability-kernel membership for monotone control systems.

Uncontrolled kernels are decided along a single trajectory. A trajectory can
only be declared viable with a certificate, never because it merely survived
the horizon:

* contraction: the trajectory enters a closed L1 ball around a steady state,
  the ball lies inside the constraint and the map contracts toward the
  steady state on the ball, so the tail never leaves it;
* ascent: for an increasing map and an upper-set constraint, one step with
  ``x(t+1) >= x(t)`` makes the rest of the trajectory nondecreasing, hence
  it stays in the constraint.

Everything else is ``UNDETERMINED`` at the horizon.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .order import (
    ArrayLike,
    Classification,
    IndicatorSet,
    MonotoneDynamics,
    as_control,
    state_slice,
)

Map = Callable[[np.ndarray], np.ndarray]
Predicate = Callable[[np.ndarray], bool]

DEFAULT_HORIZON = 1000
RELATIVE_RADIUS = 1e-6


def l1(v: ArrayLike) -> float:
    return float(np.sum(np.abs(np.asarray(v, dtype=float))))


class Outcome(str, Enum):
    VIABLE = "viable"
    NON_VIABLE = "non_viable"
    UNDETERMINED = "undetermined"


class Conclusion(str, Enum):
    IN_KERNEL = "in_kernel"
    NOT_IN_KERNEL = "not_in_kernel"
    UNKNOWN = "unknown"


class Emptiness(str, Enum):
    KERNEL_EMPTY = "kernel_empty"
    KERNEL_NONEMPTY = "kernel_nonempty"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class KernelQueryConfig:
    """Settings for one uncontrolled membership query.

    ``contraction_constant`` must bound ``|f(x) - steady_state|_1 /
    |x - steady_state|_1`` at least on the decision ball. ``ball_in_constraint``
    certifies that the closed ball lies inside the constraint; estimation
    routines derive it from indicator Lipschitz bounds instead. ``monotone``
    enables the ascent certificate and is only sound for increasing maps and
    upper-set constraints.
    """

    horizon: int = DEFAULT_HORIZON
    steady_state: np.ndarray | None = None
    contraction_constant: float | None = None
    decision_radius: float | None = None
    ball_in_constraint: bool | None = None
    monotone: bool = False
    norm: str = "L1"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.norm != "L1":
            raise ValueError("only the L1 norm is supported")
        if self.steady_state is not None:
            object.__setattr__(self, "steady_state", np.asarray(self.steady_state, dtype=float).reshape(-1))
        if self.contraction_constant is not None and not (0 <= self.contraction_constant < 1):
            raise ValueError("contraction constant must lie in [0, 1)")
        if self.decision_radius is not None and not self.decision_radius > 0:
            raise ValueError("decision radius must be positive")

    @property
    def radius(self) -> float | None:
        if self.decision_radius is not None:
            return self.decision_radius
        if self.steady_state is None:
            return None
        size = l1(self.steady_state)
        return RELATIVE_RADIUS * size if size > 0 else RELATIVE_RADIUS


@dataclass(frozen=True)
class KernelVerdict:
    outcome: Outcome
    step: int
    certificate: str | None = None
    trajectory_summary: tuple[tuple[int, bool], ...] = ()

    @property
    def viable(self) -> bool:
        return self.outcome is Outcome.VIABLE

    @property
    def membership(self) -> bool | None:
        """True / False / None (undetermined)."""
        if self.outcome is Outcome.UNDETERMINED:
            return None
        return self.outcome is Outcome.VIABLE


@dataclass(frozen=True)
class EstimateVerdict:
    lower_member: bool
    upper_member: bool | None
    conclusion: Conclusion
    parts: dict[str, KernelVerdict] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class EmptinessResult:
    verdict: Emptiness
    indicator_values: tuple[float, ...]
    failing: tuple[str, ...] = ()
    witness: np.ndarray | None = None


def trajectory(f: Map, x0: ArrayLike, t_max: int) -> list[np.ndarray]:
    """Iterates ``[x0, f(x0), ..., f^t_max(x0)]``."""
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    x = np.asarray(x0, dtype=float).reshape(-1)
    out = [x]
    for t in range(1, t_max + 1):
        x = np.asarray(f(x), dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite state produced at step {t}")
        out.append(x)
    return out


def kernel_membership_uncontrolled(f: Map, v0: Predicate, x0: ArrayLike, cfg: KernelQueryConfig) -> KernelVerdict:
    """Decide whether ``f^t(x0)`` stays in ``v0`` for all ``t >= 0``."""
    x = np.asarray(x0, dtype=float).reshape(-1)
    xbar = cfg.steady_state
    eps = cfg.radius
    use_ball = (
        xbar is not None
        and cfg.contraction_constant is not None
        and bool(cfg.ball_in_constraint)
    )
    summary: list[tuple[int, bool]] = []
    for t in range(cfg.horizon + 1):
        inside = bool(v0(x))
        summary.append((t, inside))
        if not inside:
            return KernelVerdict(Outcome.NON_VIABLE, t, None, tuple(summary))
        if use_ball and l1(x - xbar) <= eps:
            return KernelVerdict(Outcome.VIABLE, t, "contraction", tuple(summary))
        if t == cfg.horizon:
            break
        nxt = np.asarray(f(x), dtype=float).reshape(-1)
        if not np.all(np.isfinite(nxt)):
            raise FloatingPointError(f"non-finite state produced at step {t + 1}")
        if cfg.monotone and np.all(x <= nxt):
            return KernelVerdict(Outcome.VIABLE, t, "ascent", tuple(summary))
        x = nxt
    return KernelVerdict(Outcome.UNDETERMINED, cfg.horizon, None, tuple(summary))


def ball_inside(d: IndicatorSet, xbar: np.ndarray, u: np.ndarray, radius: float) -> bool:
    """Whether the closed L1 ball of ``radius`` around ``xbar`` satisfies every indicator at ``u``.

    Requires a state Lipschitz bound on each indicator; without one the ball
    cannot be certified.
    """
    for ind in d.indicators:
        if ind.state_lipschitz is None:
            return False
        if ind.slack(xbar, u) < radius * ind.state_lipschitz:
            return False
    return True


def _query(f: Map, d: IndicatorSet, u: np.ndarray, x0: np.ndarray, cfg: KernelQueryConfig | None,
           horizon: int) -> KernelVerdict:
    if cfg is None:
        cfg = KernelQueryConfig(horizon=horizon)
    certified = cfg.steady_state is not None and ball_inside(d, cfg.steady_state, u, cfg.radius)
    cfg = replace(cfg, ball_in_constraint=certified, monotone=True)
    return kernel_membership_uncontrolled(f, state_slice(d, u), x0, cfg)


def _require_pure(d: IndicatorSet) -> Classification:
    kind = d.classification
    if kind is Classification.MIXED:
        raise ValueError(
            "sandwich estimates need a production or preservation set; "
            "indicators disagree on the control direction"
        )
    return kind


def estimate_membership(
    g: MonotoneDynamics,
    d: IndicatorSet,
    x0: ArrayLike,
    cfg: KernelQueryConfig,
    sharp_cfg: KernelQueryConfig | None = None,
) -> EstimateVerdict:
    """Bracket membership of ``x0`` in the viability kernel of ``(g, d)``.

    ``cfg`` configures queries along the upper dynamics (steady state of
    ``g.flat``); ``sharp_cfg`` those along the lower dynamics. For a
    production set the kernel sits between ``V(flat, D_flat) | V(sharp,
    D_sharp)`` and ``V(flat, D_sharp)``; for a preservation set it equals
    ``V(flat, D_flat)``.
    """
    kind = _require_pure(d)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    u_lo, u_hi = g.bounds.lower, g.bounds.upper
    if kind is Classification.PRESERVATION:
        v = _query(g.flat, d, u_lo, x0, cfg, cfg.horizon)
        parts = {"flat_flat": v}
        if v.outcome is Outcome.VIABLE:
            return EstimateVerdict(True, True, Conclusion.IN_KERNEL, parts)
        if v.outcome is Outcome.NON_VIABLE:
            return EstimateVerdict(False, False, Conclusion.NOT_IN_KERNEL, parts)
        return EstimateVerdict(False, None, Conclusion.UNKNOWN, parts)

    flat_flat = _query(g.flat, d, u_lo, x0, cfg, cfg.horizon)
    sharp_sharp = _query(g.sharp, d, u_hi, x0, sharp_cfg, cfg.horizon)
    flat_sharp = _query(g.flat, d, u_hi, x0, cfg, cfg.horizon)
    parts = {"flat_flat": flat_flat, "sharp_sharp": sharp_sharp, "flat_sharp": flat_sharp}
    lower = flat_flat.viable or sharp_sharp.viable
    upper = flat_sharp.membership
    if lower and upper is False:
        raise RuntimeError("lower estimate exceeds upper estimate; dynamics or set are not monotone")
    if lower:
        conclusion = Conclusion.IN_KERNEL
    elif upper is False:
        conclusion = Conclusion.NOT_IN_KERNEL
    else:
        conclusion = Conclusion.UNKNOWN
    return EstimateVerdict(lower, upper, conclusion, parts)


def _check_L(L: float) -> None:
    if not L < 1:
        raise ValueError(f"contraction constant {L} is not below 1")


def emptiness_test_production(d: IndicatorSet, x_bar: ArrayLike, u_sharp: ArrayLike, L: float) -> EmptinessResult:
    """One-sided emptiness test for a production set.

    Any indicator below its threshold at ``(x_bar, u_sharp)`` proves the
    kernel empty; otherwise nothing can be concluded. ``x_bar`` is the steady
    state of the upper dynamics and ``L < 1`` its contraction constant.
    """
    _check_L(L)
    if d.classification is not Classification.PRODUCTION:
        raise ValueError("expected a production set")
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    u = as_control(u_sharp)
    values = tuple(d.values(x_bar, u))
    failing = tuple(ind.name for ind, v in zip(d.indicators, values) if v < ind.threshold)
    verdict = Emptiness.KERNEL_EMPTY if failing else Emptiness.INCONCLUSIVE
    return EmptinessResult(verdict, values, failing)


def emptiness_test_preservation(d: IndicatorSet, x_bar: ArrayLike, u_flat: ArrayLike, L: float) -> EmptinessResult:
    """Exact emptiness test for a preservation set; the witness is ``x_bar``."""
    _check_L(L)
    if d.classification is not Classification.PRESERVATION:
        raise ValueError("expected a preservation set")
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    u = as_control(u_flat)
    values = tuple(d.values(x_bar, u))
    failing = tuple(ind.name for ind, v in zip(d.indicators, values) if v < ind.threshold)
    if failing:
        return EmptinessResult(Emptiness.KERNEL_EMPTY, values, failing)
    return EmptinessResult(Emptiness.KERNEL_NONEMPTY, values, (), x_bar.copy())


@dataclass(frozen=True)
class ContractionEstimate:
    estimated_L: float
    violations: int
    samples: int


def check_contraction(
    f: Map,
    x_bar: ArrayLike,
    v0: Predicate,
    sample_count: int,
    seed: int,
    domain_box: tuple[ArrayLike, ArrayLike],
    max_draws: int | None = None,
) -> ContractionEstimate:
    """Largest sampled ratio ``|f(x) - x_bar|_1 / |x - x_bar|_1`` over ``box & v0``.

    A falsification tool: a ratio >= 1 is counted as a violation. Raises if
    ``x_bar`` is not a fixed point of ``f`` to 1e-9 relative.
    """
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    scale = l1(x_bar) or 1.0
    if l1(np.asarray(f(x_bar)) - x_bar) > 1e-9 * scale:
        raise ValueError("x_bar is not a fixed point of f")
    lo = np.asarray(domain_box[0], dtype=float).reshape(-1)
    hi = np.asarray(domain_box[1], dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    max_draws = max_draws or 100 * sample_count
    worst, bad, used = 0.0, 0, 0
    for _ in range(max_draws):
        if used >= sample_count:
            break
        x = rng.uniform(lo, hi)
        if not v0(x):
            continue
        dist = l1(x - x_bar)
        if dist == 0:
            continue
        used += 1
        ratio = l1(np.asarray(f(x)) - x_bar) / dist
        worst = max(worst, ratio)
        if ratio >= 1:
            bad += 1
    return ContractionEstimate(worst, bad, used)


@dataclass(frozen=True)
class SliceGrid:
    axes: tuple[int, ...]
    coords: tuple[np.ndarray, ...]
    verdicts: np.ndarray  # object array of EstimateVerdict, shape = (resolution,) * len(axes)

    @property
    def conclusions(self) -> np.ndarray:
        return np.vectorize(lambda v: v.conclusion.value, otypes=[object])(self.verdicts)

    def rows(self):
        """Flattened ``(coordinates, verdict)`` pairs in C order."""
        for idx in np.ndindex(self.verdicts.shape):
            yield tuple(c[i] for c, i in zip(self.coords, idx)), self.verdicts[idx]


def kernel_slice_grid(
    g: MonotoneDynamics,
    d: IndicatorSet,
    axes: Sequence[int],
    base: ArrayLike,
    box: Sequence[tuple[float, float]],
    resolution: int,
    cfg: KernelQueryConfig,
    sharp_cfg: KernelQueryConfig | None = None,
) -> SliceGrid:
    """Classify a 1-D or 2-D grid of states via :func:`estimate_membership`.

    Coordinates not listed in ``axes`` are taken from ``base``.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axes = tuple(int(a) for a in axes)
    if len(axes) not in (1, 2) or len(box) != len(axes):
        raise ValueError("need one or two axes with one (lo, hi) range each")
    base = np.asarray(base, dtype=float).reshape(-1)
    coords = tuple(np.linspace(lo, hi, resolution) for lo, hi in box)
    out = np.empty((resolution,) * len(axes), dtype=object)
    for idx in np.ndindex(out.shape):
        x = base.copy()
        for a, c, i in zip(axes, coords, idx):
            x[a] = c[i]
        out[idx] = estimate_membership(g, d, x, cfg, sharp_cfg)
    return SliceGrid(axes, coords, out)


def default_radius(x_bar: ArrayLike) -> float:
    size = l1(x_bar)
    return RELATIVE_RADIUS * size if size > 0 else RELATIVE_RADIUS


__all__ = [
    "Conclusion", "ContractionEstimate", "Emptiness", "EmptinessResult", "EstimateVerdict",
    "KernelQueryConfig", "KernelVerdict", "Outcome", "SliceGrid", "ball_inside",
    "check_contraction", "default_radius", "emptiness_test_preservation",
    "emptiness_test_production", "estimate_membership", "kernel_membership_uncontrolled",
    "kernel_slice_grid", "l1", "trajectory",
]
