"""Bridging-based ranking of crowd-sourced notes."""

from .errors import (
    BridgeRankError,
    ContractError,
    DataFormatError,
    DuplicateVoteError,
    RatingRangeError,
    SchemaError,
    TrainingError,
)
from .model import ModelParams, RatingsDataset, RegConfig, Vote, gradient, loss, predict, predict_all
from .scoring import NoteScore, NoteStatus, Thresholds, classify, classify_all, score_notes
from .trainer import TrainConfig, TrainReport, canonicalize, fit, init_params

__version__ = "0.1.0"
