"""Inner-product-search data structures and the solvers built on them."""

from .errors import (
    BarrierCollapse,
    BarrierViolation,
    ConfigError,
    DimensionMismatch,
    IsotropyViolation,
    IterationExhausted,
    NoEligibleRemoval,
    NoPositiveEntry,
    NotFound,
    NotPSD,
    NoWitness,
    NumericalWarning,
    PreconditionViolation,
    SingularGram,
    SparsekitError,
)
from .linalg import (
    EigenDecomposition,
    VectorFamily,
    WeightedSelection,
    barrier_lower,
    barrier_upper,
    check_isotropy,
    psd_sqrt,
    quadratic_form,
    shifted_inverse_power,
    spectrum_bounds,
    whiten,
)
from .psearch import BatchedVectorSearchTree, MatrixSearchTree
from .sketch import SketchEnsemble, TensorSparseSketch, TensorSrhtSketch
from .afn import AfnConfig, AfnStructure, DfnStructure
from .minip import (
    MinIpConfig,
    RobustMinIpIndex,
    exact_min_ip,
    minip_transform_dataset,
    minip_transform_query,
)
from .aipe import AipeConfig, InnerProductEstimator
from .sparsifier import bss_reference, sparsify_fast, verify_sparsifier
from .kadison_singer import ks_barrier_sequence, ks_greedy_exact, ks_query_matrix, ks_select
from .expdesign import b_scores, find_ct, swap_query_matrix, swap_round

__version__ = "0.1.0"
