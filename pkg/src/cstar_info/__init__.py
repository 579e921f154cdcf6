"""Abelian C*-algebra toolkit for classical information theory experiments."""

from .algebra import (
    EQ_TOL,
    GUARD_BITS,
    ZERO_TOL,
    AlgebraMismatch,
    AtomicAlgebra,
    Element,
    GuardExceeded,
    MultiIndex,
    TensorElement,
    apply_function,
    as_tensor,
    check_guard,
    embed_at,
    norm,
    spectrum,
    tensor_power,
    tensor_product,
    trace,
    truncate_to_level,
)
from .probability import (
    Distribution,
    ProductState,
    State,
    Subalgebra,
    annihilator_projection,
    chebyshev_tail,
    distribution_of,
    evaluate,
    generated_subalgebra,
    independence_test,
    lln_moment,
    lln_moment_sweep,
    prob_interval,
    pure_check,
    sum_pushforward,
)
from .information import (
    Code,
    CodeMetrics,
    Source,
    TypicalSetReport,
    aep_projection,
    aep_typical_set,
    code_metrics,
    embed_word,
    entropy,
    huffman_code,
    is_prefix_free,
    kraft_check,
    kraft_construct,
    source_output,
)
from .channel import (
    CapacityResult,
    Channel,
    Classification,
    CodingExperimentResult,
    ConvergenceError,
    InfoMetrics,
    JointResult,
    JointState,
    LosslessChannel,
    apply_channel,
    bec,
    bsc,
    build_code_and_decoder,
    capacity,
    classify,
    coding_experiment,
    identity_channel,
    info_metrics,
    joint,
    push_state,
    useless_channel,
)

__version__ = "0.1.0"
