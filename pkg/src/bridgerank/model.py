"""
Data model and the closed-form mathematics of the bridging model.

Each user u and note n carries an intercept and a one-dimensional factor.
A vote is predicted as

    r_hat[u, n] = i_u + i_n + f_u * f_n

and parameters are chosen to minimize the squared error over observed votes
plus an optional L2 penalty (separate weights for intercepts and factors).
A note's intercept i_n is its bridging score: approval that is not explained
by the alignment between rater and note viewpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DuplicateVoteError

__all__ = [
    "Vote",
    "RatingsDataset",
    "ModelParams",
    "RegConfig",
    "predict",
    "predict_all",
    "residuals",
    "loss",
    "gradient",
]


@dataclass(frozen=True)
class Vote:
    user_id: str
    note_id: str
    rating: float

    def __post_init__(self):
        r = float(self.rating)
        if not math.isfinite(r) or not -1.0 <= r <= 1.0:
            raise ContractError(f"rating must lie in [-1, 1], got {self.rating!r}")
        object.__setattr__(self, "rating", r)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class RatingsDataset:
    """Immutable sparse collection of votes with dense user/note indices.

    Indices are assigned in first-appearance order unless ``user_ids`` /
    ``note_ids`` are given explicitly, in which case those orders come first
    and may include entities that cast or received no votes.
    """

    __slots__ = ("votes", "user_index", "note_index", "user_ids", "note_ids",
                 "users", "notes", "ratings")

    def __init__(
        self,
        votes: Iterable[Vote] = (),
        *,
        user_ids: Sequence[str] = (),
        note_ids: Sequence[str] = (),
        on_duplicate: str = "error",
    ):
        if on_duplicate not in ("error", "last"):
            raise ContractError(f"on_duplicate must be 'error' or 'last', got {on_duplicate!r}")

        user_index: dict[str, int] = {}
        note_index: dict[str, int] = {}
        for uid in user_ids:
            if uid in user_index:
                raise ContractError(f"duplicate user id {uid!r} in explicit index")
            user_index[uid] = len(user_index)
        for nid in note_ids:
            if nid in note_index:
                raise ContractError(f"duplicate note id {nid!r} in explicit index")
            note_index[nid] = len(note_index)

        # Insertion-ordered; last-write-wins keeps the slot of the first occurrence.
        by_pair: dict[tuple[str, str], Vote] = {}
        for v in votes:
            if not isinstance(v, Vote):
                v = Vote(*v)
            key = (v.user_id, v.note_id)
            if key in by_pair and on_duplicate == "error":
                raise DuplicateVoteError(f"duplicate vote for user {v.user_id!r} on note {v.note_id!r}")
            by_pair[key] = v
            user_index.setdefault(v.user_id, len(user_index))
            note_index.setdefault(v.note_id, len(note_index))

        self.votes: tuple[Vote, ...] = tuple(by_pair.values())
        self.user_index: Mapping[str, int] = user_index
        self.note_index: Mapping[str, int] = note_index
        self.user_ids: tuple[str, ...] = tuple(user_index)
        self.note_ids: tuple[str, ...] = tuple(note_index)
        self.users = _frozen(np.fromiter((user_index[v.user_id] for v in self.votes),
                                         dtype=np.intp, count=len(self.votes)))
        self.notes = _frozen(np.fromiter((note_index[v.note_id] for v in self.votes),
                                         dtype=np.intp, count=len(self.votes)))
        self.ratings = _frozen(np.fromiter((v.rating for v in self.votes),
                                           dtype=np.float64, count=len(self.votes)))

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_notes(self) -> int:
        return len(self.note_ids)

    def __len__(self) -> int:
        return len(self.votes)

    def __iter__(self):
        return iter(self.votes)

    def __eq__(self, other):
        if not isinstance(other, RatingsDataset):
            return NotImplemented
        return (self.votes == other.votes and self.user_ids == other.user_ids
                and self.note_ids == other.note_ids)

    def __hash__(self):
        return hash((self.votes, self.user_ids, self.note_ids))

    def __repr__(self):
        return f"RatingsDataset(users={self.n_users}, notes={self.n_notes}, votes={len(self)})"

    def note_vote_counts(self) -> np.ndarray:
        return np.bincount(self.notes, minlength=self.n_notes)

    def user_vote_counts(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    def with_votes(self, extra: Iterable[Vote]) -> "RatingsDataset":
        """Return a new dataset with ``extra`` appended; duplicates are rejected."""
        return RatingsDataset(
            list(self.votes) + list(extra), user_ids=self.user_ids, note_ids=self.note_ids
        )


@dataclass(frozen=True, eq=False)
class ModelParams:
    user_intercepts: np.ndarray
    user_factors: np.ndarray
    note_intercepts: np.ndarray
    note_factors: np.ndarray

    def __post_init__(self):
        for name in ("user_intercepts", "user_factors", "note_intercepts", "note_factors"):
            a = np.array(getattr(self, name), dtype=np.float64)
            if a.ndim != 1:
                raise ContractError(f"{name} must be one-dimensional")
            object.__setattr__(self, name, _frozen(a))
        if len(self.user_intercepts) != len(self.user_factors):
            raise ContractError("user intercept and factor arrays differ in length")
        if len(self.note_intercepts) != len(self.note_factors):
            raise ContractError("note intercept and factor arrays differ in length")

    @classmethod
    def zeros(cls, n_users: int, n_notes: int) -> "ModelParams":
        return cls(np.zeros(n_users), np.zeros(n_users), np.zeros(n_notes), np.zeros(n_notes))

    @property
    def n_users(self) -> int:
        return len(self.user_intercepts)

    @property
    def n_notes(self) -> int:
        return len(self.note_intercepts)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.user_intercepts, self.user_factors,
                               self.note_intercepts, self.note_factors])

    @classmethod
    def from_vector(cls, vec, n_users: int, n_notes: int) -> "ModelParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (2 * n_users + 2 * n_notes,):
            raise ContractError("parameter vector has the wrong length")
        u, n = n_users, n_notes
        return cls(vec[:u], vec[u:2 * u], vec[2 * u:2 * u + n], vec[2 * u + n:])

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.as_vector()).all())

    def flip_factors(self) -> "ModelParams":
        return ModelParams(self.user_intercepts, -self.user_factors,
                           self.note_intercepts, -self.note_factors)

    def __eq__(self, other):
        """Bitwise equality of all four arrays."""
        if not isinstance(other, ModelParams):
            return NotImplemented
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self._arrays(), other._arrays())
        )

    __hash__ = None

    def _arrays(self):
        return (self.user_intercepts, self.user_factors, self.note_intercepts, self.note_factors)


@dataclass(frozen=True)
class RegConfig:
    lambda_intercept: float = 0.15
    lambda_factor: float = 0.03

    def __post_init__(self):
        for name in ("lambda_intercept", "lambda_factor"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ContractError(f"{name} must be a finite non-negative number, got {val!r}")


NO_REG = RegConfig(0.0, 0.0)


def _check_dims(params: ModelParams, data: RatingsDataset) -> None:
    if params.n_users != data.n_users or params.n_notes != data.n_notes:
        raise ContractError(
            f"params are dimensioned for {params.n_users} users x {params.n_notes} notes, "
            f"data has {data.n_users} x {data.n_notes}"
        )


def predict(params: ModelParams, user_idx: int, note_idx: int) -> float:
    """Predicted vote of one user on one note."""
    if not 0 <= user_idx < params.n_users:
        raise IndexError(f"user index {user_idx} out of range [0, {params.n_users})")
    if not 0 <= note_idx < params.n_notes:
        raise IndexError(f"note index {note_idx} out of range [0, {params.n_notes})")
    return float(
        params.user_intercepts[user_idx]
        + params.note_intercepts[note_idx]
        + params.user_factors[user_idx] * params.note_factors[note_idx]
    )


def predict_all(params: ModelParams, data: RatingsDataset) -> np.ndarray:
    """Predictions for every observed vote, in dataset order."""
    _check_dims(params, data)
    u, n = data.users, data.notes
    return (params.user_intercepts[u] + params.note_intercepts[n]
            + params.user_factors[u] * params.note_factors[n])


def residuals(params: ModelParams, data: RatingsDataset) -> np.ndarray:
    return predict_all(params, data) - data.ratings


def _penalty(params: ModelParams, reg: RegConfig) -> float:
    pen = 0.0
    if reg.lambda_intercept:
        pen += reg.lambda_intercept * (params.user_intercepts @ params.user_intercepts
                                       + params.note_intercepts @ params.note_intercepts)
    if reg.lambda_factor:
        pen += reg.lambda_factor * (params.user_factors @ params.user_factors
                                    + params.note_factors @ params.note_factors)
    return float(pen)


def loss(params: ModelParams, data: RatingsDataset, reg: RegConfig = NO_REG) -> float:
    """Sum of squared residuals over observed votes plus the L2 penalty."""
    e = residuals(params, data)
    return float(e @ e) + _penalty(params, reg)


def gradient(params: ModelParams, data: RatingsDataset, reg: RegConfig = NO_REG) -> ModelParams:
    """Analytic gradient of :func:`loss`, shaped like ``params``."""
    e2 = 2.0 * residuals(params, data)
    return _gradient_from_residuals(params, data, reg, e2)


def _gradient_from_residuals(params, data, reg, e2):
    u, n = data.users, data.notes
    U, N = data.n_users, data.n_notes
    # bincount accumulates in input order, so the reduction is deterministic.
    g_iu = np.bincount(u, weights=e2, minlength=U)
    g_in = np.bincount(n, weights=e2, minlength=N)
    g_fu = np.bincount(u, weights=e2 * params.note_factors[n], minlength=U)
    g_fn = np.bincount(n, weights=e2 * params.user_factors[u], minlength=N)
    li, lf = 2.0 * reg.lambda_intercept, 2.0 * reg.lambda_factor
    return ModelParams(
        g_iu + li * params.user_intercepts,
        g_fu + lf * params.user_factors,
        g_in + li * params.note_intercepts,
        g_fn + lf * params.note_factors,
    )
