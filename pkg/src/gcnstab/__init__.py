"""Single-layer graph convolutional models with certified stability bounds.

The library builds sparse graph filters, trains one-parameter-layer models
with batch-size-1 SGD, runs coupled perturbed-trajectory experiments, and
computes the closed-form uniform-stability and generalization-gap bounds
those experiments are checked against.
"""
from .datasets import Dataset, generate_synthetic, load_canonical, save_canonical, split
from .ego import (
    EgoGraph,
    FeatureMatrix,
    GLambdaResult,
    extract_ego,
    features_are_unit,
    g_lambda_empirical,
    load_features,
    node_output,
    normalize_features,
    save_features,
)
from .graphs import (
    FILTER_KINDS,
    CsrMatrix,
    FilterKind,
    FilterMatrix,
    Graph,
    build_filter,
    build_graph,
    load_graph,
    principal_submatrix,
    save_graph,
)
from .model import (
    ACTIVATIONS,
    Activation,
    Loss,
    ModelState,
    certify_bounds,
    default_loss_bound,
    derive_constants,
    forward_full,
    get_loss,
    grad_from_aggregate,
    node_loss_grad,
)
from .spectral import (
    InterlacingReport,
    SpectralResult,
    dense_lambda_max,
    dense_spectrum,
    ego_index_set,
    interlacing_check,
    lambda_max,
    random_walk_spectral_radius,
)
from .stability import (
    BoundInputs,
    GapReport,
    StabilityEstimate,
    beta_bound,
    empirical_gap,
    empirical_stability,
    expected_delta_theta_bound,
    gen_gap_bound,
)
from .training import (
    Perturbation,
    SequenceMode,
    SgdConfig,
    SgdResult,
    TwinTrace,
    make_sequence,
    sgd_train,
    twin_train,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVATIONS",
    "Activation",
    "BoundInputs",
    "CsrMatrix",
    "Dataset",
    "EgoGraph",
    "FILTER_KINDS",
    "FeatureMatrix",
    "FilterKind",
    "FilterMatrix",
    "GLambdaResult",
    "GapReport",
    "Graph",
    "InterlacingReport",
    "Loss",
    "ModelState",
    "Perturbation",
    "SequenceMode",
    "SgdConfig",
    "SgdResult",
    "SpectralResult",
    "StabilityEstimate",
    "TwinTrace",
    "beta_bound",
    "build_filter",
    "build_graph",
    "certify_bounds",
    "default_loss_bound",
    "dense_lambda_max",
    "dense_spectrum",
    "derive_constants",
    "ego_index_set",
    "empirical_gap",
    "empirical_stability",
    "expected_delta_theta_bound",
    "extract_ego",
    "features_are_unit",
    "forward_full",
    "g_lambda_empirical",
    "gen_gap_bound",
    "generate_synthetic",
    "get_loss",
    "grad_from_aggregate",
    "interlacing_check",
    "lambda_max",
    "load_canonical",
    "load_features",
    "load_graph",
    "make_sequence",
    "node_loss_grad",
    "node_output",
    "normalize_features",
    "principal_submatrix",
    "random_walk_spectral_radius",
    "save_canonical",
    "save_features",
    "save_graph",
    "sgd_train",
    "split",
    "twin_train",
]
