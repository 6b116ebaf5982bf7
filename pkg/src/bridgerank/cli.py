"""Command-line entry point: ``bridgerank <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors (including refusing to
overwrite outputs without ``--force``), and 2 on data or contract errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dataio
from .errors import BridgeRankError
from .experiments import STAGE_ATTACK, STAGE_SIMULATE, STAGE_TRAIN, default_target, derive_seed
from .gradcheck import check_gradient, random_instance
from .model import RegConfig
from .scoring import classify_all, score_notes
from .simulator import Archetype, evaluate_recovery, generate, inject_attack, raw_mean_rating
from .trainer import fit

logger = logging.getLogger("bridgerank")

GRADCHECK_TOLERANCE = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bridgerank", description="Bridging-based note ranking.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit model parameters to a vote file")
    p.add_argument("--votes", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("score", help="rank notes and decide display status")
    p.add_argument("--params", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--out", required=True, help="score report path")
    p.add_argument("--config")
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-votes", type=int)
    p.add_argument("--force", action="store_true")

    for name, help_text in (("simulate", "generate a synthetic two-group vote set"),
                            ("attack", "simulate, inject sybil votes, fit and score")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--force", action="store_true")

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("convert", help="convert a public ratings TSV into a vote file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("drop", "tri"), default="drop")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("report", help="recovery metrics and score distribution")
    p.add_argument("--scores", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    return parser


def _claim(paths, force: bool) -> None:
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        raise UsageError(f"refusing to overwrite {', '.join(existing)} (use --force)")
    for p in paths:
        Path(p).parent.mkdir(parents=True, exist_ok=True)


def _check_seed(seed):
    if seed is not None and not 0 <= seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return dataio.format_real(x)
    return str(x)


def _write_table(path, rows) -> None:
    dataio._write_text(path, ("\t".join(_fmt(c) for c in row) if row else "" for row in rows))


# -- subcommands ------------------------------------------------------------

def cmd_train(args) -> int:
    _check_seed(args.seed)
    cfg = cfgmod.load_config(args.config, seed=args.seed)
    out = Path(args.out)
    params_path, echo_path = out / "params.tsv", out / "config.echo"
    _claim([params_path, echo_path], args.force)

    data = dataio.read_votes(args.votes)
    train_cfg = cfgmod.train_config(cfg)
    train_cfg = cfgmod.replace_seed(train_cfg, derive_seed(cfg["seed"], STAGE_TRAIN))
    params, report = fit(data, train_cfg)
    dataio.write_params(params, params_path, data.user_ids, data.note_ids)
    dataio._write_text(echo_path, cfgmod.echo_config(cfg).splitlines())
    print(f"epochs_run\t{report.epochs_run}")
    print(f"final_loss\t{dataio.format_real(report.final_loss)}")
    print(f"converged\t{str(report.converged).lower()}")
    return 0


def cmd_score(args) -> int:
    cfg = cfgmod.load_config(args.config, display_threshold=args.threshold, min_votes=args.min_votes)
    _claim([args.out], args.force)
    data = dataio.read_votes(args.votes)
    params, uids, nids = dataio.read_params(args.params)
    params = dataio.align_params(params, uids, nids, data)
    scores = score_notes(params, data)
    dataio.write_scores(scores, classify_all(scores, cfgmod.thresholds(cfg)), args.out)
    return 0


def cmd_simulate(args) -> int:
    _check_seed(args.seed)
    cfg = cfgmod.load_config(args.config)
    out = Path(args.out)
    paths = [out / "votes.tsv", out / "truth.tsv", out / "config.echo"]
    _claim(paths, args.force)
    sim = cfgmod.simulation_config(cfg, derive_seed(args.seed, STAGE_SIMULATE))
    data, truth = generate(sim)
    dataio.write_votes(data, paths[0])
    dataio.write_truth(truth, paths[1])
    dataio._write_text(paths[2], (f"master_seed = {args.seed}\n" + cfgmod.echo_config(cfg)).splitlines())
    return 0


def cmd_attack(args) -> int:
    _check_seed(args.seed)
    cfg = cfgmod.load_config(args.config)
    out = Path(args.out)
    names = ("votes.tsv", "truth.tsv", "params.tsv", "scores.tsv", "report.tsv", "config.echo")
    paths = {n: out / n for n in names}
    _claim(list(paths.values()), args.force)

    sim = cfgmod.simulation_config(cfg, derive_seed(args.seed, STAGE_SIMULATE))
    data, truth = generate(sim)
    atk = cfgmod.attack_config(cfg, default_target(truth))
    attacked = inject_attack(data, truth, atk, derive_seed(args.seed, STAGE_ATTACK),
                             sim.approval_probabilities)
    train_cfg = cfgmod.replace_seed(cfgmod.train_config(cfg), derive_seed(args.seed, STAGE_TRAIN))
    clean_params, _ = fit(data, train_cfg)
    params, _ = fit(attacked, train_cfg)
    scores = score_notes(params, attacked)
    statuses = classify_all(scores, cfgmod.thresholds(cfg))

    k = next(i for i, s in enumerate(scores) if s.note_id == atk.target_note)
    rows = [
        ("metric", "value"),
        ("target_note", atk.target_note),
        ("target_archetype", truth.note_archetype[atk.target_note].value),
        ("injected_raters", atk.injected_raters),
        ("injected_rating", atk.injected_rating),
        ("camouflage_votes_per_sybil", atk.camouflage_votes_per_sybil),
        ("raw_mean_before", raw_mean_rating(data, atk.target_note)),
        ("raw_mean_after", raw_mean_rating(attacked, atk.target_note)),
        ("intercept_before", float(clean_params.note_intercepts[data.note_index[atk.target_note]])),
        ("intercept_after", scores[k].intercept),
        ("factor_after", scores[k].factor),
        ("status_after", statuses[k].value),
        ("rank_after", k + 1),
    ]
    dataio.write_votes(attacked, paths["votes.tsv"])
    dataio.write_truth(truth, paths["truth.tsv"])
    dataio.write_params(params, paths["params.tsv"], attacked.user_ids, attacked.note_ids)
    dataio.write_scores(scores, statuses, paths["scores.tsv"])
    _write_table(paths["report.tsv"], rows)
    dataio._write_text(paths["config.echo"],
                       (f"master_seed = {args.seed}\n" + cfgmod.echo_config(cfg)).splitlines())
    return 0


def cmd_gradcheck(args) -> int:
    _check_seed(args.seed)
    params, data = random_instance(args.seed)
    err = check_gradient(params, data, RegConfig())
    print(f"users\t{data.n_users}\nnotes\t{data.n_notes}\nvotes\t{len(data)}")
    print(f"max_relative_error\t{err:.3e}")
    return 0 if err < GRADCHECK_TOLERANCE else 2


def cmd_convert(args) -> int:
    _claim([args.out], args.force)
    counts = dataio.convert_public_data(args.inp, args.out, args.mode)
    for key in sorted(counts):
        print(f"{key}\t{counts[key]}", file=sys.stderr)
    return 0


def report_rows(scores, statuses, truth, bin_width: float = 0.1):
    """Recovery metrics followed by a per-archetype intercept histogram."""
    m = evaluate_recovery(scores, truth)
    rows = [
        ("metric", "value"),
        ("separation_margin", m.separation_margin),
        ("auc", m.auc),
        ("partisan_mean_abs_factor", m.partisan_mean_abs_factor),
    ]
    rows += [(f"mean_abs_factor_{a.value}", m.mean_abs_factor[a]) for a in Archetype]
    for st in ("DISPLAYED", "NEEDS_MORE_VOTES", "NOT_DISPLAYED"):
        rows.append((f"count_{st}", sum(s.value == st for s in statuses)))

    known = [s for s in scores if s.note_id in truth.note_archetype]
    lo = math.floor(min(s.intercept for s in known) / bin_width)
    hi = math.floor(max(s.intercept for s in known) / bin_width)
    rows += [(), ("archetype", "bin_low", "bin_high", "count")]
    for arch in Archetype:
        bins = [math.floor(s.intercept / bin_width) for s in known
                if truth.note_archetype[s.note_id] is arch]
        for b in range(lo, hi + 1):
            rows.append((arch.value, f"{b * bin_width:.2f}", f"{(b + 1) * bin_width:.2f}", bins.count(b)))
    return rows


def cmd_report(args) -> int:
    _claim([args.out], args.force)
    scores, statuses = dataio.read_scores(args.scores)
    truth = dataio.read_truth(args.truth)
    _write_table(args.out, report_rows(scores, statuses, truth))
    return 0


COMMANDS = {
    "train": cmd_train,
    "score": cmd_score,
    "simulate": cmd_simulate,
    "attack": cmd_attack,
    "gradcheck": cmd_gradcheck,
    "convert": cmd_convert,
    "report": cmd_report,
}


def run(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BridgeRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
