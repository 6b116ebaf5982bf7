"""Ranking notes by fitted intercept and deciding which ones to display."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ContractError
from .model import ModelParams, RatingsDataset

__all__ = ["NoteScore", "NoteStatus", "Thresholds", "score_notes", "classify", "classify_all"]


@dataclass(frozen=True)
class NoteScore:
    note_id: str
    intercept: float
    factor: float
    vote_count: int


class NoteStatus(enum.Enum):
    DISPLAYED = "DISPLAYED"
    NEEDS_MORE_VOTES = "NEEDS_MORE_VOTES"
    NOT_DISPLAYED = "NOT_DISPLAYED"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Thresholds:
    """Display rule knobs.

    ``factor_penalty`` enables an extra NOT_DISPLAYED rule for notes whose
    intercept is below ``-0.05 - 0.8 * |factor|``. It only changes outcomes
    when ``display_threshold`` is set below that bound.
    """

    display_threshold: float = 0.40
    min_votes: int = 5
    factor_penalty: bool = False

    def __post_init__(self):
        if int(self.min_votes) != self.min_votes or self.min_votes < 0:
            raise ContractError("min_votes must be a non-negative integer")
        if not math.isfinite(self.display_threshold):
            raise ContractError("display_threshold must be finite")


def score_notes(params: ModelParams, data: RatingsDataset) -> list[NoteScore]:
    """One score per note, highest intercept first, ties by note id."""
    if params.n_notes != data.n_notes or params.n_users != data.n_users:
        raise ContractError(
            f"params ({params.n_users} users, {params.n_notes} notes) do not match "
            f"data ({data.n_users} users, {data.n_notes} notes)"
        )
    counts = data.note_vote_counts()
    scores = [
        NoteScore(nid, float(params.note_intercepts[k]), float(params.note_factors[k]), int(counts[k]))
        for k, nid in enumerate(data.note_ids)
    ]
    scores.sort(key=lambda s: (-s.intercept, s.note_id))
    return scores


def classify(score: NoteScore, th: Thresholds = Thresholds()) -> NoteStatus:
    if score.vote_count < th.min_votes:
        return NoteStatus.NEEDS_MORE_VOTES
    if th.factor_penalty and score.intercept < -0.05 - 0.8 * abs(score.factor):
        return NoteStatus.NOT_DISPLAYED
    if score.intercept >= th.display_threshold:
        return NoteStatus.DISPLAYED
    return NoteStatus.NOT_DISPLAYED


def classify_all(scores, th: Thresholds = Thresholds()) -> list[NoteStatus]:
    return [classify(s, th) for s in scores]
