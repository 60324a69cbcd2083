"""Word-embedding denoising with a learned feed-forward filter.

Pipeline: learn a sparse-coding dictionary from the embedding matrix,
initialize a depth-T recursive filter from it, train the filter with a
cosine reconstruction loss, and project the embedding through the
trained filter. Evaluation covers word-similarity correlation,
multiple-choice synonymy, and NP bracketing.
"""

from .datasets import (
    MultipleChoiceDataset,
    NPDataset,
    WordPairDataset,
    load_multiple_choice,
    load_np_records,
    load_word_pairs,
)
from .denoiser import (
    FilterParams,
    TrainConfig,
    apply_denoising,
    batch_loss,
    compute_gradients,
    cosine_similarity,
    filter_forward,
    init_filter_params,
    load_filter_params,
    save_filter_params,
    train_denoiser,
)
from .embeddings import (
    EmbeddingMatrix,
    Vocabulary,
    load_embedding,
    parse_embedding_binary,
    parse_embedding_text,
    restrict_vocabulary,
    write_embedding_binary,
    write_embedding_text,
)
from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    ParseError,
    VecdenoiseError,
)
from .evaluation import (
    EvalReport,
    evaluate_multiple_choice,
    evaluate_np_bracketing,
    evaluate_similarity,
    np_feature_vector,
    spearman_rho,
)
from .sparse import (
    Dictionary,
    LassoConfig,
    SparseCodeMatrix,
    encode_all,
    lasso_encode,
    lasso_objective,
    learn_dictionary,
    soft_threshold,
    spectral_upper_bound,
)
from .svm import SVMModel, train_rbf_svm
from .synthetic import generate_synthetic_benchmark

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "Dictionary",
    "EmbeddingMatrix",
    "EvalReport",
    "FilterParams",
    "LassoConfig",
    "MultipleChoiceDataset",
    "NPDataset",
    "NumericalError",
    "ParseError",
    "SVMModel",
    "SparseCodeMatrix",
    "TrainConfig",
    "VecdenoiseError",
    "Vocabulary",
    "WordPairDataset",
    "apply_denoising",
    "batch_loss",
    "compute_gradients",
    "cosine_similarity",
    "encode_all",
    "evaluate_multiple_choice",
    "evaluate_np_bracketing",
    "evaluate_similarity",
    "filter_forward",
    "generate_synthetic_benchmark",
    "init_filter_params",
    "lasso_encode",
    "lasso_objective",
    "learn_dictionary",
    "load_embedding",
    "load_filter_params",
    "load_multiple_choice",
    "load_np_records",
    "load_word_pairs",
    "np_feature_vector",
    "parse_embedding_binary",
    "parse_embedding_text",
    "restrict_vocabulary",
    "save_filter_params",
    "soft_threshold",
    "spearman_rho",
    "spectral_upper_bound",
    "train_denoiser",
    "train_rbf_svm",
    "write_embedding_binary",
    "write_embedding_text",
]
