"""Constraint-based sequential pattern mining and dichotomic pattern embeddings."""

__version__ = "0.1.0"

from .seqdb import (
    Event,
    Sequence,
    SequenceDatabase,
    attach_order_attribute,
    load_csv,
    load_jsonl,
    split_by_label,
    validate,
    write_jsonl,
)
from .miner import (
    ConstraintSpec,
    MinedPattern,
    MiningConfig,
    constrained_support,
    embedding_satisfies,
    mine,
    mine_bruteforce,
)
from .dpm import DpmResult, lift_report, run_dpm
from .encoder import FeatureMatrix, contains, encode, export_csv, read_csv
from .baseline import ModelConfig, Protocol, auc, evaluate, predict, train, tune_threshold
