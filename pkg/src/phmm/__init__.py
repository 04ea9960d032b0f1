"""HMM parameter estimation with partial and noisy access to the hidden states."""

from .errors import (
    DegenerateLikelihood,
    DegenerateStatistics,
    InstanceTooLarge,
    InvalidModel,
    PhmmError,
    UndefinedMargin,
)
from .hmm import (
    FitReport,
    ScaledTrellis,
    StopRule,
    backward_scaled,
    baum_welch_fit,
    baum_welch_step,
    forward_scaled,
    log_likelihood,
    posteriors,
    sample_sequence,
    trellis,
    viterbi,
)
from .model import HmmModel, load_model, reference_model, random_model, save_model, validate_model
from .side_info import (
    SENTINEL,
    PhmmFitReport,
    SideInfoParams,
    joint_log_likelihood,
    nu,
    phmm_backward_scaled,
    phmm_em_step,
    phmm_fit,
    phmm_forward_scaled,
    phmm_posteriors,
    phmm_trellis,
)
from .simulate import corrupt_labels

__version__ = "0.1.0"
