"""Seeded end-to-end experiments: recovery, vote budgets, and sybil attacks.

Every stochastic stage draws its seed from one master seed through
:func:`derive_seed`, so a whole run is reproduced from a single integer.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import RatingsDataset
from .scoring import NoteScore, NoteStatus, Thresholds, classify, score_notes
from .simulator import (
    Archetype,
    AttackConfig,
    GroundTruth,
    RecoveryMetrics,
    SimulationConfig,
    evaluate_recovery,
    generate,
    inject_attack,
    raw_mean_rating,
)
from .trainer import TrainConfig, TrainReport, fit

# Stage tags mixed into the master seed.
STAGE_SIMULATE = 1
STAGE_ATTACK = 2
STAGE_TRAIN = 3


def derive_seed(seed: int, stage: int) -> int:
    return int(np.random.SeedSequence([seed, stage]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RecoveryRun:
    seed: int
    data: RatingsDataset
    truth: GroundTruth
    scores: list[NoteScore]
    report: TrainReport
    metrics: RecoveryMetrics


def simulate(sim: SimulationConfig, seed: int):
    return generate(dataclasses.replace(sim, seed=derive_seed(seed, STAGE_SIMULATE)))


def train(data: RatingsDataset, train_cfg: TrainConfig, seed: int):
    return fit(data, dataclasses.replace(train_cfg, seed=derive_seed(seed, STAGE_TRAIN)))


def recovery_run(seed: int, sim: SimulationConfig = SimulationConfig(),
                 train_cfg: TrainConfig = TrainConfig()) -> RecoveryRun:
    data, truth = simulate(sim, seed)
    params, report = train(data, train_cfg, seed)
    scores = score_notes(params, data)
    return RecoveryRun(seed, data, truth, scores, report, evaluate_recovery(scores, truth))


@dataclass(frozen=True)
class BudgetPoint:
    votes_per_note: int
    successes: int
    trials: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def vote_budget_curve(budgets: Sequence[int], seeds: Sequence[int],
                      sim: SimulationConfig = SimulationConfig(),
                      train_cfg: TrainConfig = TrainConfig()) -> list[BudgetPoint]:
    """Fraction of seeds with a positive separation margin at each budget."""
    curve = []
    for v in budgets:
        cfg = dataclasses.replace(sim, votes_per_note=v)
        ok = sum(recovery_run(s, cfg, train_cfg).metrics.separated for s in seeds)
        curve.append(BudgetPoint(v, ok, len(seeds)))
    return curve


def smallest_sufficient_budget(curve: Sequence[BudgetPoint], min_rate: float = 19 / 20):
    for pt in curve:
        if pt.success_rate >= min_rate:
            return pt.votes_per_note
    return None


@dataclass(frozen=True)
class AttackOutcome:
    seed: int
    target_note: str
    raw_mean_before: float
    raw_mean_after: float
    intercept_before: float
    intercept_after: float
    factor_after: float
    displayed: bool


def default_target(truth: GroundTruth) -> str:
    return truth.notes_of(Archetype.PARTISAN_B)[0]


def attack_run(seed: int, sim: SimulationConfig = SimulationConfig(),
               atk: AttackConfig | None = None, train_cfg: TrainConfig = TrainConfig(),
               th: Thresholds = Thresholds()):
    """Fit with and without injected sybils; returns the outcome and attacked run artifacts."""
    data, truth = simulate(sim, seed)
    if atk is None:
        atk = AttackConfig(target_note=default_target(truth))
    attacked = inject_attack(data, truth, atk, derive_seed(seed, STAGE_ATTACK),
                             sim.approval_probabilities)

    clean_params, _ = train(data, train_cfg, seed)
    params, report = train(attacked, train_cfg, seed)
    scores = score_notes(params, attacked)
    target = next(s for s in scores if s.note_id == atk.target_note)
    k_clean = data.note_index[atk.target_note]
    outcome = AttackOutcome(
        seed=seed,
        target_note=atk.target_note,
        raw_mean_before=raw_mean_rating(data, atk.target_note),
        raw_mean_after=raw_mean_rating(attacked, atk.target_note),
        intercept_before=float(clean_params.note_intercepts[k_clean]),
        intercept_after=target.intercept,
        factor_after=target.factor,
        displayed=classify(target, th) is NoteStatus.DISPLAYED,
    )
    return outcome, attacked, truth, params, scores
