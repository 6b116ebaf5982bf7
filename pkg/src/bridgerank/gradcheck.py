"""Finite-difference verification of the analytic gradient."""

from __future__ import annotations

import numpy as np

from .model import ModelParams, RatingsDataset, RegConfig, Vote, gradient, loss


def random_instance(seed: int, n_users: int | None = None, n_notes: int | None = None,
                    density: float = 0.3, n_votes: int | None = None):
    """Random ±1 votes on a random subset of (user, note) cells plus random params.

    Sizes default to 5-20 users and 4-15 notes. Exactly ``n_votes`` cells are
    observed, or ``round(density * U * N)`` (at least one) when not given.
    """
    rng = np.random.default_rng(seed)
    U = int(rng.integers(5, 21)) if n_users is None else n_users
    N = int(rng.integers(4, 16)) if n_notes is None else n_notes
    if n_votes is None:
        n_votes = max(1, round(density * U * N))
    cells = rng.choice(U * N, size=n_votes, replace=False)
    ratings = rng.choice([-1.0, 1.0], size=n_votes)
    votes = [Vote(f"u{c // N}", f"n{c % N}", r) for c, r in zip(cells, ratings)]
    data = RatingsDataset(votes, user_ids=[f"u{k}" for k in range(U)],
                          note_ids=[f"n{k}" for k in range(N)])
    params = ModelParams(*(rng.uniform(-1, 1, size) for size in (U, U, N, N)))
    return params, data


def finite_difference_gradient(params: ModelParams, data: RatingsDataset, reg: RegConfig,
                               step: float = 1e-5) -> np.ndarray:
    """Central differences of :func:`loss`, one coordinate at a time."""
    base = params.as_vector()
    out = np.empty_like(base)
    U, N = params.n_users, params.n_notes
    for k in range(base.size):
        hi, lo = base.copy(), base.copy()
        hi[k] += step
        lo[k] -= step
        out[k] = (loss(ModelParams.from_vector(hi, U, N), data, reg)
                  - loss(ModelParams.from_vector(lo, U, N), data, reg)) / (2 * step)
    return out


def max_relative_error(analytic, numeric) -> float:
    """max_k |a_k - b_k| / max(|a_k|, |b_k|, 1)."""
    a, b = np.asarray(analytic), np.asarray(numeric)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)))


def check_gradient(params: ModelParams, data: RatingsDataset, reg: RegConfig = RegConfig(),
                   step: float = 1e-5) -> float:
    analytic = gradient(params, data, reg).as_vector()
    return max_relative_error(analytic, finite_difference_gradient(params, data, reg, step))
