"""imgany: training-free multi-modal conditioning fusion.

Turns per-modality embeddings into three generation conditions: a fused
embedding (c1), an entity word string (c2), and an attribute word string
(c3), via lexicon-derived embedding banks, exact cosine retrieval, and
similarity/distance-based fusion weights. No parameters are learned
anywhere; for fixed inputs and config, every output is deterministic.
"""
from .backend import (
    DecodeRequest,
    EncodeRequest,
    decode_remote,
    encode_remote,
    mock_encode,
)
from .bank import (
    EmbeddingBank,
    FilteredBankView,
    LexiconEntry,
    apply_adjective_filter,
    build_bank,
    import_jsonl,
    load_bank,
    save_bank,
)
from .core import (
    ConditionBundle,
    FusionConfig,
    FusionWeights,
    ModalityFeature,
    ModalityTag,
    mean_feature,
    normalize,
    total_variance,
)
from .errors import ImgAnyError
from .fusion import (
    AttributeBranchResult,
    EntityBranchResult,
    attribute_retrieve,
    attribute_weights,
    entity_retrieve,
    entity_weights,
    run_pipeline,
    threshold_fuse,
    weighted_fuse,
)
from .retrieval import RetrievalHit, batch_retrieve, retrieve_top_k, retrieve_top_k_oracle
from .service import FusionService, ServiceConfig

__version__ = "0.1.0"

__all__ = [
    "AttributeBranchResult",
    "ConditionBundle",
    "DecodeRequest",
    "EmbeddingBank",
    "EncodeRequest",
    "EntityBranchResult",
    "FilteredBankView",
    "FusionConfig",
    "FusionService",
    "FusionWeights",
    "ImgAnyError",
    "LexiconEntry",
    "ModalityFeature",
    "ModalityTag",
    "RetrievalHit",
    "ServiceConfig",
    "apply_adjective_filter",
    "attribute_retrieve",
    "attribute_weights",
    "batch_retrieve",
    "build_bank",
    "decode_remote",
    "encode_remote",
    "entity_retrieve",
    "entity_weights",
    "import_jsonl",
    "load_bank",
    "mean_feature",
    "mock_encode",
    "normalize",
    "retrieve_top_k",
    "retrieve_top_k_oracle",
    "run_pipeline",
    "save_bank",
    "threshold_fuse",
    "total_variance",
    "weighted_fuse",
]
