"""
Tab-separated file formats.

votes:   ``user_id  note_id  rating`` with a header row.
params:  two sections, ``[users]`` then ``[notes]``, each with a header row
         ``<kind>_id  intercept  factor``; reals use 17 significant digits.
scores:  ``note_id  intercept  factor  vote_count  status  rank``.
truth:   ``entity  id  label`` where entity is ``user`` or ``note``.

All files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ContractError,
    DataFormatError,
    DuplicateVoteError,
    RatingRangeError,
    SchemaError,
)
from .model import ModelParams, RatingsDataset, Vote
from .scoring import NoteScore, NoteStatus

logger = logging.getLogger(__name__)

VOTES_HEADER = ("user_id", "note_id", "rating")
SCORES_HEADER = ("note_id", "intercept", "factor", "vote_count", "status", "rank")
TRUTH_HEADER = ("entity", "id", "label")

PUBLIC_LEVELS = {"HELPFUL": 1.0, "NOT_HELPFUL": -1.0, "SOMEWHAT_HELPFUL": 0.0}
PUBLIC_REQUIRED = ("noteId", "raterParticipantId", "helpfulnessLevel")


def format_real(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(x), ".17g")


def format_rating(r: float) -> str:
    if r == 1.0:
        return "1"
    if r == -1.0:
        return "-1"
    return repr(float(r))


def _read_lines(path) -> list[str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror or exc}", path=path) from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        raise DataFormatError("invalid UTF-8", path=path, line=line) from exc
    if text.startswith("\ufeff"):
        text = text[1:]
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _write_text(path, lines: Iterable[str]) -> None:
    text = "".join(f"{ln}\n" for ln in lines)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataFormatError(f"cannot write file: {exc.strerror or exc}", path=path) from exc


def _check_id(value: str, what: str) -> None:
    if value == "" or any(c in value for c in "\t\n\r"):
        raise ContractError(f"{what} {value!r} cannot be written as a TSV field")


def _parse_real(field: str, path, lineno: int, what: str) -> float:
    try:
        x = float(field)
    except ValueError:
        raise DataFormatError(f"{what} {field!r} is not a number", path=path, line=lineno) from None
    return x


# -- votes ------------------------------------------------------------------

def read_votes(path, on_duplicate: str = "error") -> RatingsDataset:
    """Load a vote file.

    Indices follow first appearance. Duplicate (user, note) pairs raise
    :class:`DuplicateVoteError` unless ``on_duplicate="last"``.
    """
    lines = _read_lines(path)
    if not lines:
        raise DataFormatError("missing header row", path=path, line=1)
    if tuple(lines[0].split("\t")) != VOTES_HEADER:
        raise DataFormatError(f"expected header {'<TAB>'.join(VOTES_HEADER)!r}", path=path, line=1)

    votes = []
    seen: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataFormatError(f"expected 3 fields, got {len(fields)}", path=path, line=lineno)
        uid, nid, rtext = fields
        if not uid or not nid:
            raise DataFormatError("empty user_id or note_id", path=path, line=lineno)
        r = _parse_real(rtext, path, lineno, "rating")
        if not math.isfinite(r) or not -1.0 <= r <= 1.0:
            raise RatingRangeError(f"rating {rtext!r} outside [-1, 1]", path=path, line=lineno)
        key = (uid, nid)
        if key in seen and on_duplicate == "error":
            raise DuplicateVoteError(
                f"{path}:{lineno}: duplicate vote for user {uid!r} on note {nid!r} "
                f"(first seen on line {seen[key]})"
            )
        seen.setdefault(key, lineno)
        votes.append(Vote(uid, nid, r))
    return RatingsDataset(votes, on_duplicate=on_duplicate)


def write_votes(data: RatingsDataset, path) -> None:
    lines = ["\t".join(VOTES_HEADER)]
    for v in data.votes:
        _check_id(v.user_id, "user_id")
        _check_id(v.note_id, "note_id")
        lines.append(f"{v.user_id}\t{v.note_id}\t{format_rating(v.rating)}")
    _write_text(path, lines)


# -- params -----------------------------------------------------------------

def write_params(params: ModelParams, path, user_ids: Sequence[str] = None,
                 note_ids: Sequence[str] = None) -> None:
    """Write fitted parameters; ids default to the entity's position."""
    if user_ids is None:
        user_ids = [str(k) for k in range(params.n_users)]
    if note_ids is None:
        note_ids = [str(k) for k in range(params.n_notes)]
    if len(user_ids) != params.n_users or len(note_ids) != params.n_notes:
        raise ContractError("id lists do not match parameter dimensions")

    lines = ["[users]", "user_id\tintercept\tfactor"]
    for uid, i, f in zip(user_ids, params.user_intercepts, params.user_factors):
        _check_id(uid, "user_id")
        lines.append(f"{uid}\t{format_real(i)}\t{format_real(f)}")
    lines += ["[notes]", "note_id\tintercept\tfactor"]
    for nid, i, f in zip(note_ids, params.note_intercepts, params.note_factors):
        _check_id(nid, "note_id")
        lines.append(f"{nid}\t{format_real(i)}\t{format_real(f)}")
    _write_text(path, lines)


def read_params(path) -> tuple[ModelParams, list[str], list[str]]:
    """Inverse of :func:`write_params`: returns ``(params, user_ids, note_ids)``."""
    lines = _read_lines(path)
    sections = {"users": ([], [], []), "notes": ([], [], [])}
    expected = [("[users]", "user_id\tintercept\tfactor", "users"),
                ("[notes]", "note_id\tintercept\tfactor", "notes")]
    pos = 0
    for marker, header, key in expected:
        if pos >= len(lines) or lines[pos] != marker:
            raise DataFormatError(f"expected section marker {marker!r}", path=path, line=pos + 1)
        if pos + 1 >= len(lines) or lines[pos + 1] != header:
            raise DataFormatError(f"expected header {header!r}", path=path, line=pos + 2)
        pos += 2
        ids, icpt, fac = sections[key]
        seen = set()
        while pos < len(lines) and lines[pos] != "[notes]":
            fields = lines[pos].split("\t")
            if len(fields) != 3 or not fields[0]:
                raise DataFormatError("expected 3 fields: id, intercept, factor", path=path, line=pos + 1)
            if fields[0] in seen:
                raise DataFormatError(f"duplicate id {fields[0]!r}", path=path, line=pos + 1)
            seen.add(fields[0])
            ids.append(fields[0])
            for target, text in ((icpt, fields[1]), (fac, fields[2])):
                x = _parse_real(text, path, pos + 1, "value")
                if not math.isfinite(x):
                    raise DataFormatError(f"non-finite value {text!r}", path=path, line=pos + 1)
                target.append(x)
            pos += 1
    if pos != len(lines):
        raise DataFormatError("unexpected content after [notes] section", path=path, line=pos + 1)

    uids, ui, uf = sections["users"]
    nids, ni, nf = sections["notes"]
    params = ModelParams(np.array(ui, dtype=np.float64), np.array(uf, dtype=np.float64),
                         np.array(ni, dtype=np.float64), np.array(nf, dtype=np.float64))
    return params, uids, nids


def align_params(params: ModelParams, user_ids: Sequence[str], note_ids: Sequence[str],
                 data: RatingsDataset) -> ModelParams:
    """Reorder named parameters to match ``data``'s indices.

    Every user and note in ``data`` must have parameters; extra entries are
    ignored.
    """
    upos = {u: k for k, u in enumerate(user_ids)}
    npos = {n: k for k, n in enumerate(note_ids)}
    missing = [u for u in data.user_ids if u not in upos] + [n for n in data.note_ids if n not in npos]
    if missing:
        raise ContractError(
            f"{len(missing)} users/notes in the votes have no fitted parameters, e.g. {missing[0]!r}"
        )
    ui = np.array([upos[u] for u in data.user_ids], dtype=np.intp)
    ni = np.array([npos[n] for n in data.note_ids], dtype=np.intp)
    return ModelParams(params.user_intercepts[ui], params.user_factors[ui],
                       params.note_intercepts[ni], params.note_factors[ni])


# -- scores -----------------------------------------------------------------

def write_scores(scores: Sequence[NoteScore], statuses: Sequence[NoteStatus], path) -> None:
    """Score report in rank order (rank is 1-based position in ``scores``)."""
    if len(scores) != len(statuses):
        raise ContractError("scores and statuses differ in length")
    lines = ["\t".join(SCORES_HEADER)]
    for rank, (s, st) in enumerate(zip(scores, statuses), start=1):
        _check_id(s.note_id, "note_id")
        lines.append(
            f"{s.note_id}\t{format_real(s.intercept)}\t{format_real(s.factor)}\t"
            f"{s.vote_count}\t{NoteStatus(st).value}\t{rank}"
        )
    _write_text(path, lines)


def read_scores(path) -> tuple[list[NoteScore], list[NoteStatus]]:
    lines = _read_lines(path)
    if not lines or tuple(lines[0].split("\t")) != SCORES_HEADER:
        raise DataFormatError(f"expected header {'<TAB>'.join(SCORES_HEADER)!r}", path=path, line=1)
    scores, statuses = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(SCORES_HEADER):
            raise DataFormatError(f"expected {len(SCORES_HEADER)} fields, got {len(fields)}",
                                  path=path, line=lineno)
        nid, icpt, fac, count, status, rank = fields
        try:
            vote_count = int(count)
            st = NoteStatus(status)
            int(rank)
        except ValueError as exc:
            raise DataFormatError(str(exc), path=path, line=lineno) from None
        scores.append(NoteScore(nid, _parse_real(icpt, path, lineno, "intercept"),
                                _parse_real(fac, path, lineno, "factor"), vote_count))
        statuses.append(st)
    return scores, statuses


# -- ground truth -----------------------------------------------------------

def write_truth(truth, path) -> None:
    lines = ["\t".join(TRUTH_HEADER)]
    lines += [f"user\t{uid}\t{grp.value}" for uid, grp in truth.user_group.items()]
    lines += [f"note\t{nid}\t{arch.value}" for nid, arch in truth.note_archetype.items()]
    _write_text(path, lines)


def read_truth(path):
    from .simulator import Archetype, GroundTruth, Group

    lines = _read_lines(path)
    if not lines or tuple(lines[0].split("\t")) != TRUTH_HEADER:
        raise DataFormatError(f"expected header {'<TAB>'.join(TRUTH_HEADER)!r}", path=path, line=1)
    users, notes = {}, {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataFormatError("expected 3 fields", path=path, line=lineno)
        kind, ident, label = fields
        try:
            if kind == "user":
                users[ident] = Group(label)
            elif kind == "note":
                notes[ident] = Archetype(label)
            else:
                raise ValueError(f"unknown entity kind {kind!r}")
        except ValueError as exc:
            raise DataFormatError(str(exc), path=path, line=lineno) from None
    return GroundTruth(note_archetype=notes, user_group=users)


# -- public data adapter ----------------------------------------------------

def convert_public_data(ratings_path, out_path, mapping_mode: str = "drop") -> dict[str, int]:
    """Translate a public notes-ratings TSV into the vote format.

    HELPFUL maps to 1 and NOT_HELPFUL to -1. SOMEWHAT_HELPFUL is dropped in
    ``drop`` mode and becomes 0.0 in ``tri`` mode. Other levels are dropped
    and counted. Returns counts keyed by ``written`` and ``dropped:<level>``.
    """
    if mapping_mode not in ("drop", "tri"):
        raise ContractError(f"mapping_mode must be 'drop' or 'tri', got {mapping_mode!r}")
    lines = _read_lines(ratings_path)
    if not lines:
        raise SchemaError("empty file, no header row", path=ratings_path, line=1)
    header = lines[0].split("\t")
    missing = [c for c in PUBLIC_REQUIRED if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}", path=ratings_path, line=1)
    col = {name: header.index(name) for name in PUBLIC_REQUIRED}
    width = max(col.values()) + 1

    counts: Counter = Counter()
    out = ["\t".join(VOTES_HEADER)]
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) < width:
            raise DataFormatError(f"row has {len(fields)} fields, need at least {width}",
                                  path=ratings_path, line=lineno)
        level = fields[col["helpfulnessLevel"]].strip()
        rating = PUBLIC_LEVELS.get(level)
        if rating is None or (rating == 0.0 and mapping_mode == "drop"):
            counts[f"dropped:{level or '<empty>'}"] += 1
            continue
        uid, nid = fields[col["raterParticipantId"]], fields[col["noteId"]]
        if not uid or not nid:
            raise DataFormatError("empty rater or note id", path=ratings_path, line=lineno)
        out.append(f"{uid}\t{nid}\t{format_rating(rating)}")
        counts["written"] += 1

    unknown = {k: v for k, v in counts.items()
               if k.startswith("dropped:") and k != "dropped:SOMEWHAT_HELPFUL"}
    for key, n in sorted(unknown.items()):
        logger.warning("dropped %d rating(s) with unrecognized helpfulness level %r", n, key[8:])
    counts.setdefault("written", 0)
    _write_text(out_path, out)
    return dict(counts)
