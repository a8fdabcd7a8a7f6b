"""Simulation laboratory for continuous-time Gaussian feedback channels.

The channel ``Y(t) = int_0^t g(s, M, Y_0^s) ds + B(t)`` is discretised by
Euler-Maruyama on time grids; mutual information of the discretised
channel is estimated by an exact-density plug-in estimator and by the
causal-MMSE formula, and compared against upper bounds and closed forms.
"""

__version__ = "0.1.0"

from .channels import (
    BUILTINS,
    ChannelDrift,
    ChannelSpec,
    ConditionReport,
    Message,
    builtin_constant_antipodal,
    builtin_saturated_feedback,
    builtin_sk_linear_feedback,
    builtin_zero,
    check_conditions,
    estimate_average_power,
)
from .coding import CodeConfig, TransmissionResult, error_rate_curve, sk_transmit
from .discretize import (
    EMPath,
    GirsanovExponent,
    exponent_A1,
    exponent_A2,
    exponent_A3,
    loglog_slope,
    simulate_em,
    simulate_reference,
    strong_error_study,
)
from .infotheory import (
    MIEstimate,
    PosteriorWeights,
    bpsk_awgn_oracle,
    capacity_band,
    mi_bound_chain,
    mi_cmmse,
    mi_convergence_study,
    mi_plugin,
    posterior_weights,
)
from .stochastic import (
    BrownianPath,
    SamplePath,
    TimeGrid,
    bridge_refine,
    make_even_grid,
    refine_grid,
    sample_brownian,
    sup_distance,
)
