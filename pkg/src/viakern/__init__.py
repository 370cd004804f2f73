"""Viability kernels of monotone harvest models.

``order`` holds states, monotone dynamics and acceptable sets, ``viability``
the membership and emptiness tests, ``ageclass`` the age-structured fish
model, ``io`` file formats and ``toy`` the inline expression grammar.
"""
from .ageclass import (
    AgeClassParams,
    SSBConvention,
    ThresholdReport,
    TwoSexParams,
    beverton_holt,
    catch_at_age,
    equilibrium,
    make_protect_set,
    make_yield_set,
    max_sustainable_thresholds,
    phi_g,
    ssb,
    step,
    thresholds,
    yield_biomass,
)
from .io import ParseError, load_species
from .order import (
    Classification,
    ControlBounds,
    Direction,
    Indicator,
    IndicatorSet,
    MonotoneDynamics,
    check_monotonicity,
)
from .toy import ToyError, parse_toy
from .viability import (
    Conclusion,
    Emptiness,
    KernelQueryConfig,
    Outcome,
    check_contraction,
    emptiness_test_preservation,
    emptiness_test_production,
    estimate_membership,
    kernel_membership_uncontrolled,
    kernel_slice_grid,
)

__version__ = "0.1.0"
