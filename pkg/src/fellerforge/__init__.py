"""Simulation and numerical verification of Levy-driven SDEs, random time
changes and state-dependent symbols."""
from .coefficients import StateCoefficient, as_coefficient
from .conditions import (
    DEFAULT_GRIDS,
    ProbeGrids,
    bernstein_link,
    check_cor15,
    check_cor17,
    check_decomposable_pair,
    check_growth_timechange,
    check_perpetual,
    check_stable_dominated,
    check_thm13,
)
from .continuity import continuity_json, continuity_probe
from .errors import (
    AccuracyError,
    CapabilityError,
    CensoredError,
    DomainError,
    ForgeError,
    ParameterDomainError,
    SimulationBudgetError,
)
from .generator import TransformGrid, apply_generator, direct_generator, generator_function
from .levy import (
    ExponentSpec,
    LevyTriplet,
    QuadratureConfig,
    evaluate_exponent,
    levy_khintchine,
    to_triplet,
    transition_cf_reference,
)
from .paths import Ensemble, MCConfig, PathSkeleton
from .reports import FAIL, INCONCLUSIVE, PASS, ConditionReport
from .rng import RngStream
from .sampling import IncrementSampler, sample_increments
from .sde import detect_explosion, euler_maruyama, simulate_levy
from .symbols import (
    CutoffSpec,
    StateCharacteristics,
    StateSymbol,
    evaluate_symbol,
    perturbation_apply,
    perturbation_bound,
    truncate_symbol,
)
from .timechange import additive_clock, inverse_clock, simulate_timechanged, time_change_path
from .verify import (
    CFEstimate,
    VerifyReport,
    cross_validate_weak,
    empirical_cf,
    ks_two_sample,
    martingale_residual,
    maximal_inequality_probe,
    moment_scaling_probe,
    perpetual_integral_mc,
)

__version__ = "0.1.0"
