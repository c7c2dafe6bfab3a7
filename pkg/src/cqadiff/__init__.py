"""Relative difficulty estimation for community Q&A question pairs.

The pipeline: ingest dump files into a dataset, build the temporal difficulty
network, compute per-question node scores, train the pair-orientation
classifier, and serve predictions with a guarded online feedback loop.
"""

from .ingest import Dataset, load_dataset, load_dataset_from_dumps, save_dataset
from .network import DifficultyNetwork, EdgeType, build_network, load_network, save_network
from .features import NodeScoreCache, ReferenceCorpus, compute_cache, load_cache, save_cache
from .model import (
    ColdStartRequired,
    EvalReport,
    PairClassifier,
    TrainConfig,
    Verdict,
    evaluate,
    incremental_update,
    load_model,
    make_training_set,
    predict_pair,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "load_dataset", "load_dataset_from_dumps", "save_dataset",
    "DifficultyNetwork", "EdgeType", "build_network", "load_network", "save_network",
    "NodeScoreCache", "ReferenceCorpus", "compute_cache", "load_cache", "save_cache",
    "ColdStartRequired", "EvalReport", "PairClassifier", "TrainConfig", "Verdict",
    "evaluate", "incremental_update", "load_model", "make_training_set",
    "predict_pair", "save_model", "train",
    "__version__",
]
