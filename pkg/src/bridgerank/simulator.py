"""
Two-group synthetic electorate with planted note archetypes.

Raters belong to group A or group B. Notes are one of three archetypes:
approved by both groups (BRIDGING), mostly by A (PARTISAN_A), or mostly by
B (PARTISAN_B). Votes are drawn from a per archetype x group approval
probability. The module also injects sybil raters and measures how well a
fitted model separates bridging notes from partisan ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError
from .model import RatingsDataset, Vote
from .scoring import NoteScore

__all__ = [
    "Group",
    "Archetype",
    "SimulationConfig",
    "GroundTruth",
    "AttackConfig",
    "RecoveryMetrics",
    "DEFAULT_APPROVAL",
    "generate",
    "inject_attack",
    "evaluate_recovery",
    "raw_mean_rating",
]


class Group(enum.Enum):
    A = "A"
    B = "B"

    def other(self) -> "Group":
        return Group.B if self is Group.A else Group.A


class Archetype(enum.Enum):
    BRIDGING = "BRIDGING"
    PARTISAN_A = "PARTISAN_A"
    PARTISAN_B = "PARTISAN_B"

    @property
    def is_partisan(self) -> bool:
        return self is not Archetype.BRIDGING


DEFAULT_APPROVAL: Mapping[tuple[Archetype, Group], float] = {
    (Archetype.BRIDGING, Group.A): 0.85,
    (Archetype.BRIDGING, Group.B): 0.85,
    (Archetype.PARTISAN_A, Group.A): 0.9,
    (Archetype.PARTISAN_A, Group.B): 0.1,
    (Archetype.PARTISAN_B, Group.A): 0.1,
    (Archetype.PARTISAN_B, Group.B): 0.9,
}

_NOTE_PREFIX = {
    Archetype.BRIDGING: "bridging",
    Archetype.PARTISAN_A: "partisan_a",
    Archetype.PARTISAN_B: "partisan_b",
}


@dataclass(frozen=True)
class SimulationConfig:
    users_per_group: int = 100
    notes_per_archetype: int = 20
    votes_per_note: int = 30
    approval_probabilities: Mapping[tuple[Archetype, Group], float] = field(
        default_factory=lambda: dict(DEFAULT_APPROVAL)
    )
    seed: int = 0

    def __post_init__(self):
        for name in ("users_per_group", "notes_per_archetype", "votes_per_note"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ContractError(f"{name} must be a positive integer, got {val!r}")
        probs = dict(self.approval_probabilities)
        for arch in Archetype:
            for grp in Group:
                if (arch, grp) not in probs:
                    raise ContractError(f"missing approval probability for {arch.value} x {grp.value}")
                p = probs[(arch, grp)]
                if not (0.0 <= p <= 1.0):
                    raise ContractError(f"approval probability {arch.value} x {grp.value} = {p!r} not in [0, 1]")
        if not (0 <= self.seed < 2**64):
            raise ContractError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "approval_probabilities", probs)

    @property
    def n_users(self) -> int:
        return 2 * self.users_per_group

    @property
    def n_notes(self) -> int:
        return 3 * self.notes_per_archetype

    def p(self, arch: Archetype, grp: Group) -> float:
        return self.approval_probabilities[(arch, grp)]


@dataclass(frozen=True)
class GroundTruth:
    note_archetype: Mapping[str, Archetype]
    user_group: Mapping[str, Group]

    def notes_of(self, arch: Archetype) -> list[str]:
        return [nid for nid, a in self.note_archetype.items() if a is arch]


@dataclass(frozen=True)
class AttackConfig:
    target_note: str
    injected_raters: int = 100
    injected_rating: int = 1
    rater_group_alignment: Group = Group.B
    camouflage_votes_per_sybil: int = 0

    def __post_init__(self):
        if int(self.injected_raters) != self.injected_raters or self.injected_raters < 0:
            raise ContractError("injected_raters must be a non-negative integer")
        if int(self.camouflage_votes_per_sybil) != self.camouflage_votes_per_sybil \
                or self.camouflage_votes_per_sybil < 0:
            raise ContractError("camouflage_votes_per_sybil must be a non-negative integer")
        if self.injected_rating not in (1, -1):
            raise ContractError("injected_rating must be +1 or -1")


@dataclass(frozen=True)
class RecoveryMetrics:
    separation_margin: float
    auc: float
    mean_abs_factor: Mapping[Archetype, float]
    partisan_mean_abs_factor: float

    @property
    def separated(self) -> bool:
        return self.separation_margin > 0


def user_ids_for(cfg: SimulationConfig) -> tuple[list[str], list[str]]:
    width = max(3, len(str(cfg.users_per_group - 1)))
    a = [f"a{k:0{width}d}" for k in range(cfg.users_per_group)]
    b = [f"b{k:0{width}d}" for k in range(cfg.users_per_group)]
    return a, b


def note_ids_for(cfg: SimulationConfig) -> list[tuple[str, Archetype]]:
    width = max(3, len(str(cfg.notes_per_archetype - 1)))
    return [
        (f"{_NOTE_PREFIX[arch]}-{k:0{width}d}", arch)
        for arch in Archetype
        for k in range(cfg.notes_per_archetype)
    ]


def _vote(rng: np.random.Generator, p: float) -> float:
    return 1.0 if rng.random() < p else -1.0


def generate(cfg: SimulationConfig) -> tuple[RatingsDataset, GroundTruth]:
    """Sample a ratings dataset from the two-group model.

    Every note gets ``votes_per_note`` distinct raters, half from each group
    (group A takes the odd one out). Each note draws from its own substream
    seeded by ``(seed, note_position)``. All users and notes are registered
    in the dataset index, including any user who happens to draw no votes.
    """
    v = cfg.votes_per_note
    if v > cfg.n_users:
        raise ContractError(f"votes_per_note={v} exceeds the {cfg.n_users} available raters")
    n_a, n_b = (v + 1) // 2, v // 2
    a_ids, b_ids = user_ids_for(cfg)
    notes = note_ids_for(cfg)

    votes: list[Vote] = []
    for pos, (nid, arch) in enumerate(notes):
        rng = np.random.default_rng([cfg.seed, pos])
        raters = [(a_ids[k], Group.A) for k in rng.choice(cfg.users_per_group, n_a, replace=False)]
        raters += [(b_ids[k], Group.B) for k in rng.choice(cfg.users_per_group, n_b, replace=False)]
        for uid, grp in raters:
            votes.append(Vote(uid, nid, _vote(rng, cfg.p(arch, grp))))

    truth = GroundTruth(
        note_archetype={nid: arch for nid, arch in notes},
        user_group={**{u: Group.A for u in a_ids}, **{u: Group.B for u in b_ids}},
    )
    data = RatingsDataset(votes, user_ids=a_ids + b_ids, note_ids=[nid for nid, _ in notes])
    return data, truth


def inject_attack(
    data: RatingsDataset,
    truth: GroundTruth,
    atk: AttackConfig,
    seed: int,
    approval_probabilities: Mapping[tuple[Archetype, Group], float] = DEFAULT_APPROVAL,
) -> RatingsDataset:
    """Return a copy of ``data`` with sybil raters added.

    Each sybil is a new account. It casts ``injected_rating`` on the target
    and, as camouflage, votes on distinct random other notes the way the
    aligned group would. Notes without a known archetype are never used for
    camouflage.
    """
    if atk.target_note not in data.note_index:
        raise ContractError(f"unknown target note {atk.target_note!r}")
    if atk.injected_raters == 0:
        return data

    pool = [nid for nid in data.note_ids if nid != atk.target_note and nid in truth.note_archetype]
    if atk.camouflage_votes_per_sybil > len(pool):
        raise ContractError(
            f"camouflage_votes_per_sybil={atk.camouflage_votes_per_sybil} exceeds the "
            f"{len(pool)} other notes"
        )

    width = max(3, len(str(atk.injected_raters - 1)))
    prefix = "sybil-"
    while any(uid.startswith(prefix) for uid in data.user_ids):
        prefix = "x" + prefix

    rng = np.random.default_rng([seed, 0x5B11])
    extra: list[Vote] = []
    for k in range(atk.injected_raters):
        uid = f"{prefix}{k:0{width}d}"
        extra.append(Vote(uid, atk.target_note, float(atk.injected_rating)))
        if atk.camouflage_votes_per_sybil:
            picks = rng.choice(len(pool), atk.camouflage_votes_per_sybil, replace=False)
            for j in picks:
                nid = pool[j]
                p = approval_probabilities[(truth.note_archetype[nid], atk.rater_group_alignment)]
                extra.append(Vote(uid, nid, _vote(rng, p)))
    return data.with_votes(extra)


def raw_mean_rating(data: RatingsDataset, note_id: str) -> float:
    k = data.note_index[note_id]
    mask = data.notes == k
    return float(data.ratings[mask].mean()) if mask.any() else math.nan


def _auc(pos: Sequence[float], neg: Sequence[float]) -> float:
    """Probability a random positive outranks a random negative; ties count half."""
    pos = np.asarray(pos, dtype=np.float64)[:, None]
    neg = np.asarray(neg, dtype=np.float64)[None, :]
    wins = (pos > neg).sum() + 0.5 * (pos == neg).sum()
    return float(wins / (pos.size * neg.size))


def evaluate_recovery(scores: Sequence[NoteScore], truth: GroundTruth) -> RecoveryMetrics:
    """Compare fitted note scores against the planted archetypes."""
    by_id = {s.note_id: s for s in scores}
    missing = [nid for nid in truth.note_archetype if nid not in by_id]
    if missing:
        raise ContractError(f"{len(missing)} notes from the ground truth have no score, e.g. {missing[0]!r}")

    bridging = [by_id[n].intercept for n, a in truth.note_archetype.items() if not a.is_partisan]
    partisan = [by_id[n].intercept for n, a in truth.note_archetype.items() if a.is_partisan]
    if not bridging or not partisan:
        raise ContractError("need at least one bridging and one partisan note")

    mean_abs = {}
    for arch in Archetype:
        vals = [abs(by_id[n].factor) for n, a in truth.note_archetype.items() if a is arch]
        mean_abs[arch] = float(np.mean(vals)) if vals else math.nan

    return RecoveryMetrics(
        separation_margin=float(min(bridging) - max(partisan)),
        auc=_auc(bridging, partisan),
        mean_abs_factor=mean_abs,
        partisan_mean_abs_factor=float(np.mean(
            [abs(by_id[n].factor) for n, a in truth.note_archetype.items() if a.is_partisan])),
    )
