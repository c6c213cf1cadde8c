"""Simulation and verification toolkit for a self-similar jump SDE.

The process Z solves dZ = theta*Z^eta dt + Z_-^beta dL with L a spectrally
positive alpha-stable Levy process, alpha in (1,2).  The package provides
the parameter algebra and regime classification, samplers for the driver,
jump-adapted Euler schemes for Z and its power transform V, the exponential
functional / time-change construction of the same process, and Monte Carlo
checks (extinction probabilities, Laplace and drift identities,
self-similarity) with fully reproducible streams.
"""

from .params import (
    BoundaryFlag,
    ParameterError,
    Parameters,
    Regime,
    RegimeError,
    RegimeTag,
    classify_regime,
    derive,
)
from .specfun import (
    c_alpha,
    gamma_fn,
    laplace_exponent_xi,
    threshold_inequality_holds,
    xi_mean_drift,
)
from .stable import (
    JumpEvent,
    RngStream,
    jump_rate_above,
    sample_jumps_above,
    sample_stable_increment,
    small_jump_moments,
)
from .sde import (
    SamplePath,
    SchemeConfig,
    default_cutoff,
    hitting_time,
    jump_map_g,
    modulus_bound_check,
    power_transform,
    simulate_v,
    simulate_z_absorbed,
    simulate_z_extended,
)
from .lamperti import (
    ExpFunctionalPath,
    HorizonExhausted,
    LevyPathXi,
    cramer_condition_check,
    exponential_functional,
    lamperti_pssmp,
    pssmp_marginal,
    simulate_xi,
    time_change_inverse,
    xi_marginal_sample,
)
from .mc import (
    KsReport,
    McSummary,
    derive_stream,
    drift_identity_check,
    estimate_extinction_probability,
    extinction_profile,
    ks_two_sample,
    lamperti_vs_sde_test,
    self_similarity_test,
    summarize,
)

__version__ = "0.1.0"
