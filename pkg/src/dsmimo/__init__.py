"""Large-system analysis of double-scattering MIMO multiple-access channels.

Deterministic approximations of mutual information, MMSE SINR, sum-rate
and capacity-achieving power allocation, each validated against an exact
Monte Carlo matrix-simulation oracle.
"""

from . import errors, presets
from .detequiv import (
    DetEquivalents,
    RayleighProductParams,
    det_equivalents,
    mi_det,
    rayleigh_cubic,
    rayleigh_mi,
    rayleigh_sinr,
    sinr_det,
    sumrate_det,
)
from .fixedpoint import (
    FixedPointSolution,
    KroneckerSolution,
    residuals,
    solve_fundamental,
    solve_kronecker,
)
from .model import (
    ChannelSpec,
    UserLink,
    ValidationReport,
    fold_spec,
    fold_transmit,
    is_folded,
    make_g_correlation,
    validate,
)
from .montecarlo import (
    ChannelRealization,
    KroneckerComparison,
    MonteCarloEstimate,
    ergodic,
    exact_mi,
    exact_sinr,
    exact_sumrate,
    kronecker_conditional_oracle,
    sample_channel,
    sample_receive_factor,
    substream,
)
from .powalloc import (
    PowerAllocation,
    iterative_waterfilling,
    mi_gradient,
    waterfill_step,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "ChannelSpec",
    "DetEquivalents",
    "FixedPointSolution",
    "KroneckerComparison",
    "KroneckerSolution",
    "MonteCarloEstimate",
    "PowerAllocation",
    "RayleighProductParams",
    "UserLink",
    "ValidationReport",
    "det_equivalents",
    "ergodic",
    "errors",
    "exact_mi",
    "exact_sinr",
    "exact_sumrate",
    "fold_spec",
    "fold_transmit",
    "is_folded",
    "iterative_waterfilling",
    "kronecker_conditional_oracle",
    "make_g_correlation",
    "mi_det",
    "mi_gradient",
    "presets",
    "rayleigh_cubic",
    "rayleigh_mi",
    "rayleigh_sinr",
    "residuals",
    "sample_channel",
    "sample_receive_factor",
    "sinr_det",
    "solve_fundamental",
    "solve_kronecker",
    "substream",
    "sumrate_det",
    "validate",
    "waterfill_step",
]
