"""``key = value`` experiment configuration files."""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ContractError, DataFormatError
from .model import RegConfig
from .scoring import Thresholds
from .simulator import DEFAULT_APPROVAL, Archetype, AttackConfig, Group, SimulationConfig
from .trainer import TrainConfig


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PROB_KEYS = {
    "p_bridging_a": (Archetype.BRIDGING, Group.A),
    "p_bridging_b": (Archetype.BRIDGING, Group.B),
    "p_partisan_a_a": (Archetype.PARTISAN_A, Group.A),
    "p_partisan_a_b": (Archetype.PARTISAN_A, Group.B),
    "p_partisan_b_a": (Archetype.PARTISAN_B, Group.A),
    "p_partisan_b_b": (Archetype.PARTISAN_B, Group.B),
}

# key -> (parser, default)
SCHEMA = {
    # training
    "seed": (int, 0),
    "init_scale": (float, TrainConfig.init_scale),
    "learning_rate": (float, TrainConfig.learning_rate),
    "max_epochs": (int, TrainConfig.max_epochs),
    "tolerance": (float, TrainConfig.tolerance),
    "lambda_intercept": (float, RegConfig.lambda_intercept),
    "lambda_factor": (float, RegConfig.lambda_factor),
    # display rule
    "display_threshold": (float, Thresholds.display_threshold),
    "min_votes": (int, Thresholds.min_votes),
    "factor_penalty": (_bool, Thresholds.factor_penalty),
    # simulation
    "users_per_group": (int, SimulationConfig.users_per_group),
    "notes_per_archetype": (int, SimulationConfig.notes_per_archetype),
    "votes_per_note": (int, SimulationConfig.votes_per_note),
    **{k: (float, DEFAULT_APPROVAL[cell]) for k, cell in _PROB_KEYS.items()},
    # attack; an empty target selects the first PARTISAN_B note
    "target_note": (str, ""),
    "injected_raters": (int, 100),
    "injected_rating": (int, 1),
    "rater_group_alignment": (str, "B"),
    "camouflage_votes_per_sybil": (int, 0),
}


def defaults() -> dict:
    return {k: default for k, (_, default) in SCHEMA.items()}


def parse_config_text(text: str, path="<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError("expected 'key = value'", path=path, line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise DataFormatError(f"unknown config key {key!r}", path=path, line=lineno)
        if key in values:
            raise DataFormatError(f"config key {key!r} given twice", path=path, line=lineno)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except ValueError:
            raise DataFormatError(f"bad value {value!r} for {key}", path=path, line=lineno) from None
    return values


def load_config(path=None, **overrides) -> dict:
    """Defaults, then the file, then non-None ``overrides``."""
    cfg = defaults()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise DataFormatError(f"cannot read config: {exc}", path=path) from exc
        cfg.update(parse_config_text(text, path))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def echo_config(cfg: dict) -> str:
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        seed=cfg["seed"],
        init_scale=cfg["init_scale"],
        learning_rate=cfg["learning_rate"],
        max_epochs=cfg["max_epochs"],
        tolerance=cfg["tolerance"],
        reg=RegConfig(cfg["lambda_intercept"], cfg["lambda_factor"]),
    )


def thresholds(cfg: dict) -> Thresholds:
    return Thresholds(cfg["display_threshold"], cfg["min_votes"], cfg["factor_penalty"])


def simulation_config(cfg: dict, seed: int = 0) -> SimulationConfig:
    return SimulationConfig(
        users_per_group=cfg["users_per_group"],
        notes_per_archetype=cfg["notes_per_archetype"],
        votes_per_note=cfg["votes_per_note"],
        approval_probabilities={cell: cfg[k] for k, cell in _PROB_KEYS.items()},
        seed=seed,
    )


def attack_config(cfg: dict, default_target: str) -> AttackConfig:
    try:
        group = Group(cfg["rater_group_alignment"].upper())
    except ValueError:
        raise ContractError(
            f"rater_group_alignment must be A or B, got {cfg['rater_group_alignment']!r}"
        ) from None
    return AttackConfig(
        target_note=cfg["target_note"] or default_target,
        injected_raters=cfg["injected_raters"],
        injected_rating=cfg["injected_rating"],
        rater_group_alignment=group,
        camouflage_votes_per_sybil=cfg["camouflage_votes_per_sybil"],
    )


def replace_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return dataclasses.replace(cfg, seed=seed)
