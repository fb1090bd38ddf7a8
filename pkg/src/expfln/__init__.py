"""Exponential functional link filters in the time and frequency domains."""

from .adaptive_td import (ConfigurationError, DivergenceError, block_td_step, efln_lms_run,
                          efln_lms_step, td_init)
from .analysis import (InstabilityError, MomentAccumulator, MomentEstimates, estimate_moments,
                       mu_q_bound, mu_w_bound, op_counts, simulated_emse, theoretical_emse)
from .dsp import (ContractError, SampleBlock, forward_transform, inverse_transform,
                  overlap_save_correlate, overlap_save_filter)
from .expansion import ExpansionConfig, ExpansionKind, efln_derivative, efln_expand, expand
from .fdefln import (ConstraintViolation, fdefln_block, fdefln_init, fdefln_run,
                     fdefln_weights_time)
from .kernels import BACKEND
from .nanc import (SecondaryPath, efslms_init, efslms_run, fdefslms_block, fdefslms_init,
                   fdefslms_run)

__version__ = "0.1.0"
