"""Full-batch gradient descent for the bridging model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, TrainingError
from .model import (
    ModelParams,
    RatingsDataset,
    RegConfig,
    _gradient_from_residuals,
)

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainReport", "init_params", "fit", "canonicalize"]


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    init_scale: float = 0.05
    learning_rate: float = 0.05
    max_epochs: int = 2000
    tolerance: float = 1e-7
    reg: RegConfig = field(default_factory=RegConfig)

    def __post_init__(self):
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ContractError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        # init_scale = 0 is allowed: it yields an all-zero start.
        if not (math.isfinite(self.init_scale) and self.init_scale >= 0):
            raise ContractError("init_scale must be finite and non-negative")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ContractError("learning_rate must be positive")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ContractError("max_epochs must be an integer >= 1")
        if not (self.tolerance > 0):
            raise ContractError("tolerance must be positive")


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    final_loss: float
    loss_history: tuple[float, ...]
    converged: bool


def init_params(data: RatingsDataset, cfg: TrainConfig) -> ModelParams:
    """Draw every parameter i.i.d. from U[-init_scale, init_scale]."""
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_scale
    U, N = data.n_users, data.n_notes
    return ModelParams(
        rng.uniform(-s, s, U),
        rng.uniform(-s, s, U),
        rng.uniform(-s, s, N),
        rng.uniform(-s, s, N),
    )


def canonicalize(params: ModelParams) -> ModelParams:
    """Fix the global sign of the factors.

    The model is unchanged when every factor is negated. We pick the sign
    that makes the user factor of largest magnitude positive (lowest index
    wins ties).
    """
    if params.n_users == 0:
        return params
    k = int(np.argmax(np.abs(params.user_factors)))
    if params.user_factors[k] < 0:
        return params.flip_factors()
    return params


def fit(data: RatingsDataset, cfg: TrainConfig = TrainConfig()) -> tuple[ModelParams, TrainReport]:
    """Minimize the regularized squared loss over ``data``.

    Each entity's gradient is divided by its vote count (at least one) before
    the step, so ``learning_rate`` is insensitive to how many votes a note or
    user has. Stops once the relative change in loss drops below
    ``cfg.tolerance`` or after ``cfg.max_epochs`` epochs.
    """
    if len(data) == 0:
        raise ContractError("cannot fit an empty dataset")

    params = init_params(data, cfg)
    iu, fu = params.user_intercepts.copy(), params.user_factors.copy()
    i_n, fn = params.note_intercepts.copy(), params.note_factors.copy()

    lr = cfg.learning_rate
    step_u = lr / np.maximum(data.user_vote_counts(), 1)
    step_n = lr / np.maximum(data.note_vote_counts(), 1)
    users, notes, ratings = data.users, data.notes, data.ratings
    li, lf = cfg.reg.lambda_intercept, cfg.reg.lambda_factor

    def objective(e):
        pen = li * (iu @ iu + i_n @ i_n) + lf * (fu @ fu + fn @ fn)
        return float(e @ e + pen)

    e = iu[users] + i_n[notes] + fu[users] * fn[notes] - ratings
    prev = objective(e)
    history: list[float] = []
    converged = False
    epoch = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.max_epochs + 1):
            cur = ModelParams(iu, fu, i_n, fn)
            g = _gradient_from_residuals(cur, data, cfg.reg, 2.0 * e)
            iu = iu - step_u * g.user_intercepts
            fu = fu - step_u * g.user_factors
            i_n = i_n - step_n * g.note_intercepts
            fn = fn - step_n * g.note_factors

            e = iu[users] + i_n[notes] + fu[users] * fn[notes] - ratings
            cur_loss = objective(e)
            if not math.isfinite(cur_loss):
                raise TrainingError(
                    f"loss became non-finite at epoch {epoch}; lower the learning rate", epoch=epoch
                )
            history.append(cur_loss)
            if cur_loss == 0.0 or abs(prev - cur_loss) <= cfg.tolerance * abs(prev):
                converged = True
                break
            prev = cur_loss

    fitted = canonicalize(ModelParams(iu, fu, i_n, fn))
    logger.debug("fit: %d epochs, loss %.6g, converged=%s", epoch, history[-1], converged)
    report = TrainReport(epoch, history[-1], tuple(history), converged)
    return fitted, report
