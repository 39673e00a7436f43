"""Two-phase netflow anomaly detection.

Phase one learns entity embeddings from field co-occurrence inside single
netflow records (skip-gram with negative sampling); phase two trains an
autoencoder on concatenated embeddings of benign traffic and scores
records by reconstruction error. Includes a training-set poisoning
experiment harness.
"""

from .autoencoder import AeConfig, AeModel, encode_flows, score_vectors, train_ae
from .config import PipelineConfig, load_config
from .discretize import QuantileBinner, assign_bin, fit_quantiles
from .errors import ConfigError, DataError, DivergenceError, FlowaeError
from .evaluate import ScoreSet, ThresholdSweep, harmonic_f1, sweep_thresholds
from .experiment import run_experiment
from .ingest import FlowRecord, build_training_set, filter_tcp, parse_csv_stream
from .pipeline import run_pipeline
from .sgns import EmbeddingMatrix, SgnsConfig, sample_positive_pairs, train_embeddings
from .vocab import Vocabulary, build_vocabulary, tokenize_flow

__version__ = "0.1.0"

__all__ = [
    "AeConfig", "AeModel", "encode_flows", "score_vectors", "train_ae",
    "PipelineConfig", "load_config",
    "QuantileBinner", "assign_bin", "fit_quantiles",
    "ConfigError", "DataError", "DivergenceError", "FlowaeError",
    "ScoreSet", "ThresholdSweep", "harmonic_f1", "sweep_thresholds",
    "run_experiment",
    "FlowRecord", "build_training_set", "filter_tcp", "parse_csv_stream",
    "run_pipeline",
    "EmbeddingMatrix", "SgnsConfig", "sample_positive_pairs", "train_embeddings",
    "Vocabulary", "build_vocabulary", "tokenize_flow",
    "__version__",
]
