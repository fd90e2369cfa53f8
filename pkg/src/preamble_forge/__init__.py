"""Channel-estimation preambles with out-of-band emission constraints."""
from __future__ import annotations

from .channel_sim import (
    ChannelRealization,
    MimoObservation,
    gen_channel,
    mimo_transmit,
    monte_carlo,
    transmit,
    transmit_time,
)
from .design_solver import (
    DesignProblem,
    DesignSolution,
    Mask,
    Mode,
    comb_design,
    juxtapose,
    nef,
    solve,
)
from .errors import (
    ConvergenceError,
    InfeasibleError,
    InvalidArgumentError,
    ModelMismatchWarning,
    PreambleForgeError,
    RankDeficientError,
    SingularMatrixError,
)
from .estimation import (
    EstimationReport,
    Estimator,
    ToneGrid,
    crlb_mimo,
    crlb_siso,
    interpolate_full,
    ls_time_estimate,
    mmse_estimate,
    zf_estimate,
)
from .scenario import Scenario, load_default
from .spectral_ops import (
    FrameConfig,
    PinchWindow,
    SpectrumOperator,
    build_spectrum_operator,
    fractional_oob,
)

__version__ = "0.1.0"
