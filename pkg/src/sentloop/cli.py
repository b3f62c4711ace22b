"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric or
degenerate error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path

from sentloop import __version__
from sentloop._io import dumps, fmt
from sentloop.cohort import (
    DEFAULT_MIN_OBS,
    aggregate_by_party,
    fit_all_individuals,
    write_individuals_csv,
    write_parties_csv,
    write_skipped_csv,
    zscores,
)
from sentloop.dynamics import (
    CLASS_ORDER,
    LoopParams,
    characteristic_roots,
    classify_stability,
    detect_cycle,
    interior_equilibrium,
    simulate,
    stability_diagram,
)
from sentloop.errors import DataError, SentloopError
from sentloop.ingest import Role, filter_active_authors, parse_corpus, write_corpus
from sentloop.regression import (
    REGRESSORS,
    build_design,
    diagnose,
    fit_linear,
    predict,
    rmse,
    split_chronological,
)
from sentloop.report import build_report
from sentloop.series import build_series, write_series_csv
from sentloop.synth import make_authors, synthesize_corpus

logger = logging.getLogger("sentloop")

RANGE_OPTIONS = ("--alpha-range", "--k-range")


class UsageError(SentloopError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; 2 is reserved for data errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    return lo, hi


def _load(args) -> list:
    records, meta = parse_corpus(Path(args.input), delimiter=args.delimiter, vocabulary=args.vocabulary)
    if meta.rejected_count:
        logger.warning("%d rows rejected (first: line %d, %s)", meta.rejected_count, *meta.rejection_log[0])
    if not records:
        raise DataError("no valid rows in corpus")
    return records


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_fit(args) -> int:
    from sentloop.plotting import plot_predictions

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = _load(args)
    series = build_series(records, denominator=args.denominator, bucket=args.bucket)
    design = build_design(series, drop_gaps=args.drop_gaps)
    train, test = split_chronological(design, args.train_fraction)
    fit = fit_linear(train, with_intercept=args.intercept)
    diag = diagnose(fit, design, test)

    doc = {**fit.to_dict(), **diag.to_dict()}
    if args.intercept:
        plain = fit_linear(train)
        doc["without_intercept"] = {**plain.to_dict(), "rmse_model": rmse(predict(plain, test), test.y)}
    doc["setup"] = {
        "train_fraction": args.train_fraction,
        "n_train": len(train),
        "n_test": len(test),
        "bucket": args.bucket,
        "denominator": args.denominator,
        "drop_gaps": args.drop_gaps,
        "version": __version__,
    }
    (out / "fit.json").write_text(dumps(doc), encoding="utf-8")
    with open(out / "series.csv", "w", newline="", encoding="utf-8") as fh:
        write_series_csv(series, fh)

    pred = predict(fit, test)
    target_days = [d + timedelta(days=series.step) for d in test.row_days]
    _write_csv(
        out / "predictions.csv",
        ["day", "actual", "predicted", "naive"],
        [[d.isoformat(), fmt(a), fmt(p), fmt(n)] for d, a, p, n in zip(target_days, test.y, pred, test.X[:, 0])],
    )
    plot_predictions(target_days, test.y, pred, test.X[:, 0], out / "predictions.svg")
    print(
        f"alpha={fit.alpha:.4f} beta={fit.beta:.4f} gamma={fit.gamma:.4f} "
        f"rmse={diag.rmse_model:.4f} naive={diag.rmse_naive:.4f}"
    )
    return 0


def cmd_cohort(args) -> int:
    from sentloop.plotting import plot_party_bars

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = _load(args)
    days = sorted({r.day for r in records})
    active = filter_active_authors(records, (days[0], days[-1]), args.activity_threshold)
    logger.info("%d active authors", len(active))
    fits, skipped = fit_all_individuals(
        records, active, args.min_obs, drop_gaps=args.drop_gaps, denominator=args.denominator
    )
    with open(out / "skipped.csv", "w", newline="", encoding="utf-8") as fh:
        write_skipped_csv(skipped, fh)
    report = zscores(fits)
    parties = aggregate_by_party(report, args.min_group)
    with open(out / "individuals.csv", "w", newline="", encoding="utf-8") as fh:
        write_individuals_csv(report, fh)
    with open(out / "parties.csv", "w", newline="", encoding="utf-8") as fh:
        write_parties_csv(parties, fh)
    _write_csv(
        out / "roles.csv",
        ["role", "n", "mean_z", "median_z", "iqr_z"],
        [[g.key, g.n, fmt(g.mean_z), fmt(g.median_z), fmt(g.iqr_z)] for g in report.roles],
    )
    (out / "zscores.json").write_text(dumps(report.to_dict()), encoding="utf-8")
    plot_party_bars(parties, out / "parties.svg")
    print(f"{len(fits)} authors fitted, {len(skipped)} skipped, {len(parties)} parties reported")
    return 0


def _loop_params(args) -> LoopParams:
    if args.fit:
        doc = json.loads(Path(args.fit).read_text(encoding="utf-8"))
        alpha, beta, gamma = doc["alpha"], doc["beta"], doc["gamma"]
        offset = doc.get("intercept") or 0.0
        if offset:
            logger.warning("fitted intercept folded into the closed-loop forcing term")
    else:
        missing = [n for n in ("alpha", "beta", "gamma") if getattr(args, n) is None]
        if missing:
            raise UsageError("missing " + ", ".join(f"--{n}" for n in missing) + " (or pass --fit)")
        alpha, beta, gamma, offset = args.alpha, args.beta, args.gamma, 0.0
    try:
        return LoopParams(alpha, beta, gamma, args.a, args.b, offset)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _complex(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def cmd_simulate(args) -> int:
    from sentloop.plotting import plot_trace

    params = _loop_params(args)
    if not (-1 <= args.s0 <= 1 and -1 <= args.s1 <= 1):
        raise UsageError("--s0 and --s1 must lie in [-1, 1]")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = simulate(params, args.s0, args.s1, args.steps)
    eq = interior_equilibrium(params)
    cycle = None
    if trace.terminal.kind == "cycle":
        cycle = detect_cycle(trace, min(64, len(trace.states) // 4))
    events = set(trace.saturation_events)
    _write_csv(out / "trace.csv", ["t", "S", "saturated"], [[t, fmt(s), int(t in events)] for t, s in enumerate(trace.states)])
    doc = {
        "params": {
            "alpha": params.alpha,
            "beta": params.beta,
            "gamma": params.gamma,
            "a": params.a,
            "b": params.b,
            "offset": params.offset,
        },
        "k": params.k,
        "c": params.c,
        "class": classify_stability(params.alpha, params.k).value,
        "roots": [_complex(z) for z in characteristic_roots(params.alpha, params.k)],
        "equilibrium": eq.to_dict(),
        "cycle": {"period": cycle.period, "states": list(cycle.states)} if cycle else None,
        "terminal": {
            "kind": trace.terminal.kind,
            "value": trace.terminal.value,
            "period": trace.terminal.period,
            "steps": len(trace.states) - 2,
        },
    }
    (out / "equilibrium.json").write_text(dumps(doc), encoding="utf-8")
    plot_trace(trace, out / "trace.svg", eq.value if eq.kind != "none" else None)
    print(f"class={doc['class']} equilibrium={eq.kind}:{eq.value} terminal={trace.terminal.kind}")
    return 0


def cmd_stability_map(args) -> int:
    from sentloop.plotting import plot_diagram

    try:
        diagram = stability_diagram(args.alpha_range, args.k_range, args.resolution, args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        [fmt(a), fmt(k), CLASS_ORDER[diagram.codes[i, j]].value]
        for i, a in enumerate(diagram.alpha)
        for j, k in enumerate(diagram.k)
    ]
    _write_csv(out / "diagram.csv", ["alpha", "k", "class"], rows)
    plot_diagram(diagram, out / "diagram.svg")
    print(", ".join(f"{cls.value}={n}" for cls, n in diagram.counts().items()))
    return 0


def _parties(text: str | None) -> list[tuple[str, Role]]:
    if not text:
        return []
    out = []
    for item in text.split(","):
        name, _, role = item.partition(":")
        try:
            out.append((name.strip(), Role((role or "unknown").strip().lower())))
        except ValueError:
            raise UsageError(f"unknown role in --parties: {role!r}") from None
    return out


def cmd_synth(args) -> int:
    if args.authors < 1 or args.days < 10 or args.noise < 0:
        raise UsageError("need --authors >= 1, --days >= 10, --noise >= 0")
    parties = _parties(args.parties)
    offsets = [float(v) for v in args.party_beta_offsets.split(",")] if args.party_beta_offsets else []
    if offsets and len(offsets) != len(parties):
        raise UsageError("--party-beta-offsets needs one value per party")
    authors = make_authors(
        args.authors, args.alpha, args.beta, args.gamma, parties, offsets, args.spread, args.seed
    )
    records, truth = synthesize_corpus(authors, args.days, args.noise, args.seed, args.tweets_per_day)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        write_corpus(records, fh, args.vocabulary)
    (out.parent / "truth.json").write_text(dumps(truth), encoding="utf-8")
    print(f"wrote {len(records)} tweets by {len(authors)} authors to {out}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    text = build_report(Path(args.source), markdown=out.suffix.lower() in (".md", ".markdown"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _corpus_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="labeled tweet corpus (CSV)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--vocabulary", choices=("numeric", "word"), default="numeric", help="sentiment label vocabulary")
    p.add_argument("--denominator", choices=("inclusive", "exclusive"), default="inclusive",
                   help="engagement share denominator: all retweets, or positive+negative only")
    p.add_argument("--drop-gaps", action=argparse.BooleanOptionalAction, default=True,
                   help="drop design rows touching carried-forward days (default: on)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sentloop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sentloop {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the sentiment feedback predictor on a corpus")
    _corpus_options(p)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--intercept", action="store_true")
    p.add_argument("--bucket", choices=("day", "week"), default="day")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cohort", help="per-author fits and party z-scores")
    _corpus_options(p)
    p.add_argument("--activity-threshold", type=float, default=0.9)
    p.add_argument("--min-obs", type=int, default=DEFAULT_MIN_OBS)
    p.add_argument("--min-group", type=int, default=100)
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("simulate", help="simulate the saturated closed loop")
    for name in ("alpha", "beta", "gamma"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--fit", help="take alpha, beta, gamma from a fit.json")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--s0", type=float, default=0.0)
    p.add_argument("--s1", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stability-map", help="classify the (alpha, k) plane")
    p.add_argument("--alpha-range", type=_range, default=(-2.0, 2.0), metavar="LO:HI")
    p.add_argument("--k-range", type=_range, default=(-2.0, 2.0), metavar="LO:HI")
    p.add_argument("--resolution", type=int, default=400)
    p.add_argument("--mode", choices=("analytic", "simulated"), default="analytic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stability_map)

    p = sub.add_parser("synth", help="write a synthetic corpus with known coefficients")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--authors", type=int, default=1)
    p.add_argument("--days", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tweets-per-day", type=int, default=20)
    p.add_argument("--parties", help="comma list of NAME:ROLE, assigned round-robin")
    p.add_argument("--party-beta-offsets", help="comma list added to beta, one per party")
    p.add_argument("--spread", type=float, default=0.0, help="per-author jitter on beta and gamma")
    p.add_argument("--vocabulary", choices=("numeric", "word"), default="numeric")
    p.add_argument("--out", required=True, help="corpus CSV path; truth.json goes next to it")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="assemble a static report from run outputs")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--out", required=True, help="report file (.html, or .md for Markdown)")
    p.set_defaults(func=cmd_report)
    return parser


def _join_ranges(argv: list[str]) -> list[str]:
    # "--alpha-range -2:2" would otherwise read "-2:2" as an option
    out, i = [], 0
    while i < len(argv):
        if argv[i] in RANGE_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _join_ranges(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SentloopError as exc:
        print(f"sentloop {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"sentloop {args.command}: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
