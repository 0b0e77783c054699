from . import status
from .exceptions import *
from .config import Settings, get_settings
from .rng import RngStream
from .chain import Dist, Kernel, StateSpace, reverse_kernel, solve_stationary
from .rules import (
    IndependentTransitionsRule,
    TransitionRule,
    coupled_inverse_transform_rules,
    independent_transitions_rule,
    inverse_transform_rule,
    iterate_rule,
    kernel_from_rule,
)
from .poset import (
    CrossSmConfig,
    Poset,
    UpwardKernelFamily,
    is_cross_monotone,
    is_cross_realizably_monotone,
    is_realizably_monotone,
    is_stochastically_dominated,
    is_stochastically_monotone,
    upward_family_from_rule,
)
from .detection import (
    BoundingIntervalDetector,
    DetectionProcess,
    DrivingSequence,
    FullTrackingDetector,
    RequestedSetDetector,
    Trajectory,
    detection_soundness_check,
    mtf_chain,
)
from .imputation import impute_dist, impute_sequence
from .samplers import (
    RunOutcome,
    Search,
    altalg_run,
    cftp_run,
    fill_run,
    fill_sample,
    read_once_cftp_run,
    sm_fill_run,
    tours_generate,
)
from .schemas import ChainSpec, load_chain_spec, parse_chain_spec
