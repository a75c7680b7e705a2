"""Pattern recognition through linear encodings over prime fields.

Stored patterns and a noisy observation are compressed by sparse linear
maps; the stored index is recovered by per-index noise estimation
(truncation with a joint-typicality test, or syndrome decoding with belief
propagation) followed by a maximum-likelihood pick.
"""

from .bounds import (
    Bound,
    ldpc_bound,
    syndrome_bound,
    thm1_bound,
    thm3_bound,
    truncation_bound,
    worst_case_noise_bound,
)
from .compressors import (
    CompressorPair,
    Construction,
    LdpcEnsembleSpec,
    count_four_cycles,
    extend_to_sensory,
    ldpc_pair,
    read_alist,
    sample_ldpc,
    truncation_pair,
    write_alist,
)
from .decoders import (
    BpConfig,
    DecodeOutcome,
    InstanceTooLarge,
    bp_syndrome_decode,
    ml_syndrome_decode,
)
from .environment import (
    Environment,
    GilbertElliottNoise,
    IidNoise,
    PatternDatabase,
    ResourceError,
    TestInstance,
    draw_test,
    generate_database,
)
from .gf import (
    GF2,
    FieldSpec,
    FieldVector,
    ShapeError,
    SparseMatrix,
    mat_vec_mul,
    rank,
    row_reduce,
    solve,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
    sweep,
    wilson_interval,
    write_csv,
)
from .info import (
    Pmf,
    TypicalityMode,
    TypicalityParams,
    binary_entropy,
    convolve,
    entropy,
    seq_log_prob,
)
from .recognition import (
    CompressedMemory,
    ErrorEvent,
    RecognitionSystem,
    Strategy,
    Verdict,
    build_memory,
    classify_error,
    estimate_noise_syndrome,
    estimate_noise_truncation,
    recognize,
)

__version__ = "0.1.0"

__all__ = [
    "GF2",
    "Bound",
    "BpConfig",
    "CompressedMemory",
    "CompressorPair",
    "ConfigError",
    "Construction",
    "DecodeOutcome",
    "Environment",
    "ErrorEvent",
    "ExperimentConfig",
    "ExperimentResult",
    "FieldSpec",
    "FieldVector",
    "GilbertElliottNoise",
    "IidNoise",
    "InstanceTooLarge",
    "LdpcEnsembleSpec",
    "PatternDatabase",
    "Pmf",
    "RecognitionSystem",
    "ResourceError",
    "ShapeError",
    "SparseMatrix",
    "Strategy",
    "TestInstance",
    "TypicalityMode",
    "TypicalityParams",
    "Verdict",
    "binary_entropy",
    "bp_syndrome_decode",
    "build_memory",
    "classify_error",
    "convolve",
    "count_four_cycles",
    "draw_test",
    "entropy",
    "estimate_noise_syndrome",
    "estimate_noise_truncation",
    "extend_to_sensory",
    "generate_database",
    "ldpc_bound",
    "ldpc_pair",
    "mat_vec_mul",
    "ml_syndrome_decode",
    "rank",
    "read_alist",
    "recognize",
    "row_reduce",
    "run_experiment",
    "sample_ldpc",
    "seq_log_prob",
    "solve",
    "sweep",
    "syndrome_bound",
    "thm1_bound",
    "thm3_bound",
    "truncation_bound",
    "truncation_pair",
    "wilson_interval",
    "worst_case_noise_bound",
    "write_alist",
    "write_csv",
]
