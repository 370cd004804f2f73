"""Age-structured harvested population with Beverton-Holt recruitment.

Masses are grams throughout; :func:`to_tons` is applied only when a
:class:`ThresholdReport` is built. The control is the fishing effort
multiplier ``lam`` scaling the exploitation pattern ``F``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .order import (
    ControlBounds,
    Direction,
    Indicator,
    IndicatorSet,
    MonotoneDynamics,
)
from .viability import KernelQueryConfig, default_radius

GRAMS_PER_TON = 1e6


def to_tons(grams: float) -> float:
    return grams / GRAMS_PER_TON


def to_grams(tons: float) -> float:
    return tons * GRAMS_PER_TON


def _per_age(values, A: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(A, arr[0])
    if arr.size != A:
        raise ValueError(f"{name} has {arr.size} entries, expected {A}")
    return arr


@dataclass(frozen=True)
class AgeClassParams:
    """Single-stock parameters. ``M`` may be given as a scalar (same at all ages)."""

    A: int
    alpha: float
    beta: float
    M: np.ndarray
    F: np.ndarray
    w: np.ndarray
    gamma: np.ndarray
    pi: int = 1
    lambda_min: float = 0.0
    lambda_max: float = 1.0
    name: str = ""

    def __post_init__(self):
        A = int(self.A)
        if A < 2:
            raise ValueError("need at least two age classes")
        object.__setattr__(self, "A", A)
        for key in ("M", "F", "w", "gamma"):
            object.__setattr__(self, key, _per_age(getattr(self, key), A, key))
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("Beverton-Holt parameters must be nonnegative")
        if np.any(self.M <= 0):
            raise ValueError("natural mortality must be positive")
        if np.any(self.F < 0):
            raise ValueError("fishing mortality must be nonnegative")
        if np.any(self.w <= 0):
            raise ValueError("weights must be positive")
        if np.any((self.gamma < 0) | (self.gamma > 1)):
            raise ValueError("maturity must lie in [0, 1]")
        if self.pi not in (0, 1):
            raise ValueError("pi must be 0 or 1")
        if not 0 <= self.lambda_min <= self.lambda_max:
            raise ValueError("need 0 <= lambda_min <= lambda_max")

    @property
    def mature_weight(self) -> np.ndarray:
        return self.gamma * self.w


def beverton_holt(alpha: float, beta: float, B):
    """Recruits ``B / (alpha + beta * B)``; works elementwise on arrays."""
    B = np.asarray(B, dtype=float)
    if np.any(B < 0):
        raise ValueError("spawning biomass must be nonnegative")
    if alpha == 0 and beta == 0:
        raise ZeroDivisionError("Beverton-Holt recruitment is undefined for alpha = beta = 0")
    if alpha == 0:
        # constant recruitment, extended to B = 0 by its limit
        out = np.full_like(B, 1.0 / beta)
    else:
        out = B / (alpha + beta * B)
    return float(out) if out.ndim == 0 else out


def beverton_holt_slope(alpha: float, beta: float, B: float) -> float:
    return alpha / (alpha + beta * B) ** 2


def _recruits(alpha: float, beta: float, B: float) -> float:
    # phi(0) = 0 is the continuous extension whenever alpha > 0
    if B == 0 and alpha > 0:
        return 0.0
    return beverton_holt(alpha, beta, B)


def ssb(p: AgeClassParams, N) -> float:
    return float(np.dot(p.mature_weight, np.asarray(N, dtype=float)))


def _check_lambda(lam: float) -> float:
    lam = float(np.asarray(lam, dtype=float).reshape(-1)[0])
    if lam < 0:
        raise ValueError("effort multiplier must be nonnegative")
    return lam


def survival_step(p: AgeClassParams, lam: float) -> np.ndarray:
    """Per-age annual survival ``exp(-(M_a + lam F_a))``."""
    return np.exp(-(p.M + lam * p.F))


def _age(p: AgeClassParams, N: np.ndarray, lam: float) -> np.ndarray:
    surv = survival_step(p, lam)
    out = np.empty_like(N)
    out[1:] = surv[:-1] * N[:-1]
    out[-1] += p.pi * surv[-1] * N[-1]
    return out


def step(p: AgeClassParams, N, lam: float) -> np.ndarray:
    """One year of the harvested dynamics."""
    lam = _check_lambda(lam)
    N = np.asarray(N, dtype=float).reshape(-1)
    if N.size != p.A:
        raise ValueError(f"state has {N.size} components, expected {p.A}")
    if np.any(N < 0):
        raise ValueError("abundances must be nonnegative")
    out = _age(p, N, lam)
    out[0] = _recruits(p.alpha, p.beta, ssb(p, N))
    return out


def catch_at_age(p: AgeClassParams, N, lam: float) -> np.ndarray:
    """Baranov catch; a zero harvest rate gives zero catch (limit of 0/0)."""
    lam = _check_lambda(lam)
    N = np.asarray(N, dtype=float)
    h = lam * p.F
    z = h + p.M
    frac = np.divide(h, z, out=np.zeros_like(z), where=h > 0)
    return frac * -np.expm1(-z) * N


def yield_biomass(p: AgeClassParams, N, lam: float) -> float:
    return float(np.dot(p.w, catch_at_age(p, N, lam)))


def survival_fractions(p: AgeClassParams, lam: float) -> np.ndarray:
    lam = _check_lambda(lam)
    z = p.M + lam * p.F
    s = np.exp(-np.concatenate(([0.0], np.cumsum(z[:-1]))))
    denom = 1.0 - p.pi * np.exp(-z[-1])
    if denom <= 0:
        raise ZeroDivisionError("plus-group survival is not below one")
    s[-1] /= denom
    return s


def spawning_per_recruit(p: AgeClassParams, lam: float) -> float:
    return float(np.dot(p.mature_weight, survival_fractions(p, lam)))


def equilibrium_recruits(alpha: float, beta: float, spr: float) -> float:
    """Steady recruitment ``max(0, (spr - alpha) / (beta spr))``; zero when ``beta = 0``."""
    if beta == 0 or spr <= 0:
        return 0.0
    return max(0.0, (spr - alpha) / (beta * spr))


def equilibrium(p: AgeClassParams, lam: float) -> np.ndarray:
    s = survival_fractions(p, lam)
    return equilibrium_recruits(p.alpha, p.beta, spawning_per_recruit(p, lam)) * s


def phi_g(p: AgeClassParams, lambda_flat: float | None = None) -> float:
    """L1 contraction bound of the uncontrolled dynamics around its equilibrium.

    Valid on states whose spawning biomass is at least that of the
    equilibrium, where the Beverton-Holt slope is largest at the equilibrium.
    """
    lam = p.lambda_min if lambda_flat is None else _check_lambda(lambda_flat)
    B = ssb(p, equilibrium(p, lam))
    return float(beverton_holt_slope(p.alpha, p.beta, B) * p.mature_weight.max() + survival_step(p, lam).max())


@dataclass(frozen=True)
class ThresholdReport:
    """Maximal sustainable thresholds, biomasses in metric tons."""

    max_yield: float
    max_ssb: float
    phi_g: float
    contraction_valid: bool
    species: str = ""
    convention: str = ""

    @property
    def max_yield_grams(self) -> float:
        return to_grams(self.max_yield)

    @property
    def max_ssb_grams(self) -> float:
        return to_grams(self.max_ssb)


def max_sustainable_thresholds(p: AgeClassParams) -> ThresholdReport:
    """Largest yield and spawning biomass that can be sustained forever.

    Yield above ``Y(N_eq(lambda_min), lambda_max)`` or spawning biomass above
    ``SSB(N_eq(lambda_min))`` empties the kernel of the yield set, provided
    ``phi_g < 1`` (flagged by ``contraction_valid``).
    """
    N = equilibrium(p, p.lambda_min)
    k = phi_g(p, p.lambda_min)
    return ThresholdReport(
        max_yield=to_tons(yield_biomass(p, N, p.lambda_max)),
        max_ssb=to_tons(ssb(p, N)),
        phi_g=k,
        contraction_valid=bool(k < 1),
        species=p.name,
    )


def dynamics(p: AgeClassParams) -> MonotoneDynamics:
    return MonotoneDynamics(
        map=lambda N, u: step(p, N, u[0]),
        bounds=ControlBounds([p.lambda_min], [p.lambda_max]),
        state_dim=p.A,
        name=p.name or "age_class",
    )


def make_yield_set(p, y_min: float, b_lim: float) -> IndicatorSet:
    """``{Y(N, lam) >= y_min, SSB(N) >= b_lim}``, thresholds in grams.

    SSB ignores the control; it is registered as increasing in the control so
    the set classifies as a production set. Accepts single- or two-sex
    parameters.
    """
    if y_min < 0 or b_lim < 0:
        raise ValueError("thresholds must be nonnegative")
    return IndicatorSet((
        Indicator(lambda N, u: species_yield(p, N, u[0]), y_min, Direction.INCREASING,
                  state_lipschitz=_max_weight(p), name="yield"),
        Indicator(lambda N, u: species_ssb(p, N), b_lim, Direction.INCREASING,
                  state_lipschitz=float(p.mature_weight.max()), name="ssb"),
    ))


def fishing_mortality(p, lam: float) -> float:
    """Scalar fishing mortality ``lam * max_a F_a`` used by the precautionary set."""
    F = np.concatenate((p.male.F, p.female.F)) if isinstance(p, TwoSexParams) else p.F
    return float(lam * F.max())


def make_protect_set(p, b_lim: float, f_lim: float) -> IndicatorSet:
    """``{SSB(N) >= b_lim, -F(lam) >= -f_lim}`` (a preservation set), ``b_lim`` in grams."""
    if b_lim < 0 or f_lim < 0:
        raise ValueError("thresholds must be nonnegative")
    return IndicatorSet((
        Indicator(lambda N, u: species_ssb(p, N), b_lim, Direction.DECREASING,
                  state_lipschitz=float(p.mature_weight.max()), name="ssb"),
        Indicator(lambda N, u: -fishing_mortality(p, u[0]), -f_lim, Direction.DECREASING,
                  state_lipschitz=0.0, name="fishing_mortality"),
    ))


def local_contraction(p, lam: float, radius: float) -> float:
    """Contraction constant of the dynamics at ``lam`` toward its equilibrium on an L1 ball.

    Spawning biomass on the ball is at least ``SSB_eq - radius * max(gamma w)``,
    where the Beverton-Holt slope is largest.
    """
    N = species_equilibrium(p, lam)
    gw = float(p.mature_weight.max())
    b_low = max(0.0, species_ssb(p, N) - radius * gw)
    alpha, beta = _bh(p)
    return float(beverton_holt_slope(alpha, beta, b_low) * gw + _max_survival(p, lam))


def kernel_config(p, which: str = "flat", horizon: int = 1000) -> KernelQueryConfig:
    """Query settings for the uncontrolled dynamics at ``lambda_min`` (flat) or ``lambda_max`` (sharp).

    The contraction constant is omitted when it is not below one, in which
    case only non-viability or ascent can be decided.
    """
    if which not in ("flat", "sharp"):
        raise ValueError(f"unknown control bound {which!r}")
    lam = p.lambda_min if which == "flat" else p.lambda_max
    N = species_equilibrium(p, lam)
    radius = default_radius(N)
    L = local_contraction(p, lam, radius)
    return KernelQueryConfig(
        horizon=horizon,
        steady_state=N,
        contraction_constant=L if L < 1 else None,
        decision_radius=radius,
    )


class SSBConvention(str, Enum):
    BOTH_SEXES = "both_sexes"
    FEMALE_ONLY = "female_only"


@dataclass(frozen=True)
class TwoSexParams:
    """Two stocks sharing recruitment; state is ``concat(male, female)``.

    Recruitment ``phi(B)`` is driven by the pooled or female-only spawning
    biomass ``B`` and split between the sexes, ``recruit_sex_split`` going to
    females. Beverton-Holt parameters and effort bounds are read from the
    female parameters.
    """

    male: AgeClassParams
    female: AgeClassParams
    recruit_sex_split: float = 0.5
    ssb_convention: SSBConvention = SSBConvention.BOTH_SEXES
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ssb_convention", SSBConvention(self.ssb_convention))
        m, f = self.male, self.female
        if m.A != f.A:
            raise ValueError("sexes must have the same number of age classes")
        if (m.alpha, m.beta, m.lambda_min, m.lambda_max) != (f.alpha, f.beta, f.lambda_min, f.lambda_max):
            raise ValueError("sexes must share recruitment parameters and effort bounds")
        if not np.array_equal(m.gamma, f.gamma):
            raise ValueError("maturity ogives must be equal across sexes")
        if not 0 <= self.recruit_sex_split <= 1:
            raise ValueError("recruit_sex_split must lie in [0, 1]")

    @property
    def A(self) -> int:
        return self.female.A

    @property
    def lambda_min(self) -> float:
        return self.female.lambda_min

    @property
    def lambda_max(self) -> float:
        return self.female.lambda_max

    @property
    def convention(self) -> str:
        return f"ssb={self.ssb_convention.value},female_recruit_share={self.recruit_sex_split:g}"

    @property
    def mature_weight(self) -> np.ndarray:
        """Spawning weights of the stacked ``(male, female)`` state."""
        male = self.male.mature_weight
        if self.ssb_convention is SSBConvention.FEMALE_ONLY:
            male = np.zeros_like(male)
        return np.concatenate((male, self.female.mature_weight))

    def split(self, state) -> tuple[np.ndarray, np.ndarray]:
        state = np.asarray(state, dtype=float).reshape(-1)
        if state.size != 2 * self.A:
            raise ValueError(f"two-sex state has {state.size} components, expected {2 * self.A}")
        return state[: self.A], state[self.A:]


def two_sex_ssb(tp: TwoSexParams, state) -> float:
    return float(np.dot(tp.mature_weight, np.asarray(state, dtype=float).reshape(-1)))


def two_sex_step(tp: TwoSexParams, state, lam: float) -> np.ndarray:
    lam = _check_lambda(lam)
    male, female = tp.split(state)
    if np.any(male < 0) or np.any(female < 0):
        raise ValueError("abundances must be nonnegative")
    R = _recruits(tp.female.alpha, tp.female.beta, two_sex_ssb(tp, state))
    new_m = _age(tp.male, male, lam)
    new_f = _age(tp.female, female, lam)
    new_m[0] = (1.0 - tp.recruit_sex_split) * R
    new_f[0] = tp.recruit_sex_split * R
    return np.concatenate((new_m, new_f))


def two_sex_yield(tp: TwoSexParams, state, lam: float) -> float:
    male, female = tp.split(state)
    return yield_biomass(tp.male, male, lam) + yield_biomass(tp.female, female, lam)


def _two_sex_seed(tp: TwoSexParams, lam: float) -> np.ndarray:
    parts = []
    share = (1.0 - tp.recruit_sex_split, tp.recruit_sex_split)
    for p, q in zip((tp.male, tp.female), share):
        parts.append(q * equilibrium(p, lam))
    return np.concatenate(parts)


def two_sex_equilibrium(tp: TwoSexParams, lam: float | None = None, tol: float = 1e-12,
                        max_iter: int = 100_000) -> np.ndarray:
    """Steady state of :func:`two_sex_step` by fixed-point iteration.

    Seeded from the single-sex equilibria scaled by each sex's recruit share.
    """
    lam = tp.lambda_min if lam is None else lam
    x = _two_sex_seed(tp, lam)
    for _ in range(max_iter):
        nxt = two_sex_step(tp, x, lam)
        diff = np.abs(nxt - x).sum()
        x = nxt
        if diff <= tol * max(np.abs(x).sum(), np.finfo(float).tiny):
            return x
    raise RuntimeError(f"two-sex equilibrium did not converge in {max_iter} steps")


def two_sex_phi_g(tp: TwoSexParams, lambda_flat: float | None = None) -> float:
    lam = tp.lambda_min if lambda_flat is None else lambda_flat
    B = two_sex_ssb(tp, two_sex_equilibrium(tp, lam))
    surv = max(survival_step(tp.male, lam).max(), survival_step(tp.female, lam).max())
    return float(beverton_holt_slope(tp.female.alpha, tp.female.beta, B) * tp.mature_weight.max() + surv)


def two_sex_thresholds(tp: TwoSexParams) -> ThresholdReport:
    N = two_sex_equilibrium(tp, tp.lambda_min)
    k = two_sex_phi_g(tp, tp.lambda_min)
    return ThresholdReport(
        max_yield=to_tons(two_sex_yield(tp, N, tp.lambda_max)),
        max_ssb=to_tons(two_sex_ssb(tp, N)),
        phi_g=k,
        contraction_valid=bool(k < 1),
        species=tp.name,
        convention=tp.convention,
    )


def two_sex_dynamics(tp: TwoSexParams) -> MonotoneDynamics:
    return MonotoneDynamics(
        map=lambda x, u: two_sex_step(tp, x, u[0]),
        bounds=ControlBounds([tp.lambda_min], [tp.lambda_max]),
        state_dim=2 * tp.A,
        name=tp.name or "two_sex",
    )


CONVENTIONS: tuple[tuple[SSBConvention, float], ...] = (
    (SSBConvention.BOTH_SEXES, 0.5),
    (SSBConvention.FEMALE_ONLY, 0.5),
    (SSBConvention.BOTH_SEXES, 1.0),
    (SSBConvention.FEMALE_ONLY, 1.0),
)


def convention_table(tp: TwoSexParams) -> list[ThresholdReport]:
    """Thresholds under every enumerated recruitment/SSB convention.

    A female share of 1 credits all recruitment to the female stock, which
    then evolves exactly as a single-sex stock with female parameters.
    """
    out = []
    for conv, share in CONVENTIONS:
        variant = TwoSexParams(tp.male, tp.female, share, conv, tp.name)
        out.append(two_sex_thresholds(variant))
    return out


def thresholds(params: AgeClassParams | TwoSexParams) -> ThresholdReport:
    if isinstance(params, TwoSexParams):
        return two_sex_thresholds(params)
    return max_sustainable_thresholds(params)


def species_dynamics(params: AgeClassParams | TwoSexParams) -> MonotoneDynamics:
    if isinstance(params, TwoSexParams):
        return two_sex_dynamics(params)
    return dynamics(params)


def species_ssb(params, N) -> float:
    if isinstance(params, TwoSexParams):
        return two_sex_ssb(params, N)
    return ssb(params, N)


def species_yield(params, N, lam: float) -> float:
    if isinstance(params, TwoSexParams):
        return two_sex_yield(params, N, lam)
    return yield_biomass(params, N, lam)


def species_step(params, N, lam: float) -> np.ndarray:
    if isinstance(params, TwoSexParams):
        return two_sex_step(params, N, lam)
    return step(params, N, lam)


def species_equilibrium(params, lam: float) -> np.ndarray:
    if isinstance(params, TwoSexParams):
        return two_sex_equilibrium(params, lam)
    return equilibrium(params, lam)


def state_dim(params) -> int:
    return 2 * params.A if isinstance(params, TwoSexParams) else params.A


def _bh(params) -> tuple[float, float]:
    p = params.female if isinstance(params, TwoSexParams) else params
    return p.alpha, p.beta


def _max_weight(params) -> float:
    if isinstance(params, TwoSexParams):
        return float(max(params.male.w.max(), params.female.w.max()))
    return float(params.w.max())


def _max_survival(params, lam: float) -> float:
    if isinstance(params, TwoSexParams):
        return float(max(survival_step(params.male, lam).max(), survival_step(params.female, lam).max()))
    return float(survival_step(params, lam).max())
