"""Recursive sketching for large frequency moments."""

from .core import (
    BaseEstimate,
    L1Estimate,
    LevelOutputs,
    LevelPlan,
    estimate_l1,
    validate_plan,
    x_statistic,
    y_backsolve,
)
from .countsketch import Cover, CountSketch, cover_powers, power_width, topk_width
from .fk import FkConfig, RecursiveFkState, fk_depth, format_report
from .hashing import (
    FourwiseHash,
    HashChain,
    PairwiseBitHash,
    derive_seed,
    level_member,
    make_chain,
    make_fourwise,
    make_pairwise,
)
from .oracle import (
    ExactBase,
    ExactOracle,
    FrequencyVector,
    exact_fk,
    exact_hh_oracle,
    exact_major,
    fact51_check,
    is_cover,
)

__version__ = "0.1.0"
