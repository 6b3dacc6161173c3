"""permaudit — generate permutations by configurable shuffle algorithms and
audit their uniformity, exactly (small N, rational arithmetic) or
statistically (streaming pairwise-case estimator at realistic N)."""

from .errors import (
    BelowMinimumTrials,
    DimensionMismatch,
    DuplicateIndex,
    EnumerationTooLarge,
    FactorialTooLarge,
    ForkUnsupported,
    IncompatibleSource,
    NoUsableCases,
    OutOfRange,
    PermauditError,
    SpaceTooLarge,
    SubsetTooSmall,
    TapeExhausted,
    TooFewSamples,
    TupleSpaceTooLarge,
)
from .estimator import (
    DEFAULT_ALPHAS,
    DEFAULT_N_MIN,
    CaseCounters,
    CaseKey,
    CaseTable,
    EstimatorReport,
    RatioRow,
    accumulate,
    build_report,
    case_tail_probability,
    chi2_report,
    ratio_report,
    reduce_cases,
    total_cases,
)
from .exact import (
    ExactDistribution,
    OrderCheckResult,
    brute_force_chi2,
    check_approx_order,
    check_order_k,
    check_perfect,
    exact_distribution,
)
from .perm import (
    LiftedPermutation,
    Permutation,
    PermMultiset,
    is_cyclic,
    lift,
    parity,
    tuple_space,
    validate,
)
from .permfile import (
    FIXTURE_NAMES,
    PermFileReader,
    PermFileWriter,
    load_fixture,
    read_multiset,
    write_perm_file,
)
from .pipeline import (
    SHARD_SIZE,
    brute_file,
    estimate_file,
    generate_file,
    run_brute,
    run_pipeline,
)
from .rng import (
    AES_FIXED_KEY,
    BitSource,
    Tape,
    draw_in_range_ideal,
    make_source,
)
from .shuffle import ALGORITHMS, ShuffleSpec, generate_stream, shuffle
from .stats import (
    TailProbability,
    chi2_upper_tail,
    exact_binomial_tail,
    format_probability,
    normal_cdf,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AES_FIXED_KEY",
    "BelowMinimumTrials",
    "BitSource",
    "CaseCounters",
    "CaseKey",
    "CaseTable",
    "DEFAULT_ALPHAS",
    "DEFAULT_N_MIN",
    "DimensionMismatch",
    "DuplicateIndex",
    "EnumerationTooLarge",
    "EstimatorReport",
    "ExactDistribution",
    "FIXTURE_NAMES",
    "FactorialTooLarge",
    "ForkUnsupported",
    "IncompatibleSource",
    "LiftedPermutation",
    "NoUsableCases",
    "OrderCheckResult",
    "OutOfRange",
    "PermFileReader",
    "PermFileWriter",
    "PermMultiset",
    "PermauditError",
    "Permutation",
    "RatioRow",
    "SHARD_SIZE",
    "ShuffleSpec",
    "SpaceTooLarge",
    "SubsetTooSmall",
    "TailProbability",
    "Tape",
    "TapeExhausted",
    "TooFewSamples",
    "TupleSpaceTooLarge",
    "accumulate",
    "brute_file",
    "brute_force_chi2",
    "build_report",
    "case_tail_probability",
    "check_approx_order",
    "check_order_k",
    "check_perfect",
    "chi2_report",
    "chi2_upper_tail",
    "draw_in_range_ideal",
    "estimate_file",
    "exact_binomial_tail",
    "exact_distribution",
    "generate_file",
    "generate_stream",
    "is_cyclic",
    "lift",
    "load_fixture",
    "make_source",
    "normal_cdf",
    "parity",
    "ratio_report",
    "read_multiset",
    "reduce_cases",
    "run_brute",
    "run_pipeline",
    "shuffle",
    "total_cases",
    "tuple_space",
    "validate",
    "write_perm_file",
    "format_probability",
]
