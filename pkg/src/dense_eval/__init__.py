"""dense-eval: rerank MSMARCO-style candidate lists with precomputed
embeddings and score the result with trec_eval-compatible metrics.

The pipeline is four steps: store embeddings (embed_store), score
query/document pairs and rerank candidates (scorer), exchange qrels,
candidate and run files (msmarco_io), and compute MRR at a cutoff
(metrics). Topic-aware batch sampling (tas_sampler) and the contrastive
objective (contrastive) round out the toolkit.
"""

from .contrastive import (
    ContrastiveInstance,
    batch_contrastive,
    info_nce_from_similarities,
    info_nce_loss,
    softmax_probability,
)
from .embed_store import EmbeddingStore, StoreFormatError, open_store, write_store
from .metrics import EvalReport, EvaluationError, evaluate, reciprocal_rank
from .msmarco_io import (
    CandidateSet,
    ParseError,
    Qrels,
    RunFile,
    RunRecord,
    parse_candidates,
    parse_qrels,
    parse_run,
    write_run,
)
from .scorer import (
    MissingEmbeddingError,
    RankedList,
    RerankError,
    ScoredDoc,
    cosine,
    dot,
    rerank_all,
    rerank_query,
)
from .tas_sampler import (
    Batch,
    BatchSpec,
    SamplingError,
    TopicClustering,
    compose_batch,
    kmeans,
    load_clustering,
    save_clustering,
    write_batches,
)

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "BatchSpec",
    "CandidateSet",
    "ContrastiveInstance",
    "EmbeddingStore",
    "EvalReport",
    "EvaluationError",
    "MissingEmbeddingError",
    "ParseError",
    "Qrels",
    "RankedList",
    "RerankError",
    "RunFile",
    "RunRecord",
    "SamplingError",
    "ScoredDoc",
    "StoreFormatError",
    "TopicClustering",
    "batch_contrastive",
    "compose_batch",
    "cosine",
    "dot",
    "evaluate",
    "info_nce_from_similarities",
    "info_nce_loss",
    "kmeans",
    "load_clustering",
    "open_store",
    "parse_candidates",
    "parse_qrels",
    "parse_run",
    "reciprocal_rank",
    "rerank_all",
    "rerank_query",
    "save_clustering",
    "softmax_probability",
    "write_batches",
    "write_run",
    "write_store",
]
