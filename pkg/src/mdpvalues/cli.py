"""Command-line front end: tables, CDF data, claim verification, simulation.

Every run writes a manifest (inputs, package version, seed, grids) next to
its outputs so seeded commands can be reproduced byte for byte; manifests
never contain timestamps or absolute paths.  Exit codes: 0 success / all
claims pass, 1 claim failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .downstream import (
    RNG_IDENTITY,
    ConfigError,
    config_from_dict,
    report_to_json,
    simulate,
)
from .model import DiscreteModel, ModelError
from .orders import OrdersError, pvalue_cdf, randomized_pvalue_cdf_at, reports_to_json, reports_to_text, verify_all_claims
from .ranking import Ranking, RankingError, ranking_from_order, build_agreeing_ranking, verify_agreement
from .rational import decimal_string, format_rational
from .registry import default_statistic, resolve_model, table1_ranking
from .testing import MD, T_BASED, TestingError, pvalue_family, write_pvalue_table


class CliError(ValueError):
    """Usage or input error (exit status 2)."""


_FAMILY_FLAGS = {"t": T_BASED, "md": MD}


def _write_manifest(out: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["tool"] = "mdpv"
    payload["version"] = __version__
    path = out.with_name(out.name + ".manifest.json") if out.suffix else out / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv_writer(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _load_ranking(model: DiscreteModel, path: str) -> Ranking:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read ranking file {path}: {exc}") from None
    if not isinstance(data, list):
        raise CliError("ranking file must be a JSON array of labels, rank 1 first")
    return ranking_from_order(model, data)


def cmd_table1(args: argparse.Namespace) -> int:
    model, _ = resolve_model("example1")
    statistic = default_statistic(model)
    ranking = table1_ranking(model, statistic)
    t_family = pvalue_family(model, statistic)
    md_family = pvalue_family(model, ranking)
    p0 = model.probs(model.parameter_names[0])
    p1 = model.probs(model.parameter_names[1])
    out = Path(args.out)
    fh, writer = _csv_writer(out)
    with fh:
        writer.writerow(
            ["label", "p0", "p1", "lr", "rank", "md_natural", "t_natural",
             "p0_dec", "p1_dec", "lr_dec", "md_natural_dec", "t_natural_dec"]
        )
        for pt in sorted(model.support, key=ranking.rank):
            cells = [
                p0[pt.index], p1[pt.index], statistic.value(pt),
            ]
            writer.writerow(
                [pt.label]
                + [format_rational(c) for c in cells]
                + [ranking.rank(pt)]
                + [format_rational(md_family.natural(pt)), format_rational(t_family.natural(pt))]
                + [decimal_string(c) for c in cells]
                + [decimal_string(md_family.natural(pt)), decimal_string(t_family.natural(pt))]
            )
    _write_manifest(out, {
        "command": "table1",
        "model": "example1",
        "ranking": "table-1 head, label order after",
        "rows": model.size,
        "outputs": [out.name],
        "seed": None,
    })
    return 0


def cmd_cdf(args: argparse.Namespace) -> int:
    model, model_id = resolve_model(args.model)
    statistic = default_statistic(model, args.null, args.alt)
    theta = args.theta or model.parameter_names[0]
    if theta not in model.parameter_names:
        raise CliError(f"unknown parameter {theta!r}")
    if args.family == "md":
        source = build_agreeing_ranking(model, statistic)
    else:
        source = statistic
    family = pvalue_family(model, source)
    out = Path(args.out)
    fh, writer = _csv_writer(out)
    with fh:
        writer.writerow(["t", "F", "t_dec", "F_dec"])
        if args.uniform:
            grid = sorted({Fraction(0), Fraction(1)} | {family.a[i] + family.b[i] for i in range(family.size)})
            rows = [(t, t) for t in grid]
        elif args.u == "rand":
            grid = sorted(
                {Fraction(0), Fraction(1)}
                | set(family.a)
                | {family.a[i] + family.b[i] for i in range(family.size)}
            )
            rows = [(t, randomized_pvalue_cdf_at(model, theta, family, t)) for t in grid]
        else:
            u = Fraction(1) if args.u == "natural" else Fraction(1, 2)
            cdf = pvalue_cdf(model, theta, family, u)
            rows = list(zip(cdf.jumps, cdf.cum))
        for t, value in rows:
            writer.writerow([format_rational(t), format_rational(value), decimal_string(t), decimal_string(value)])
    _write_manifest(out, {
        "command": "cdf",
        "model": model_id,
        "family": args.family,
        "theta": theta,
        "u": args.u,
        "uniform_reference": bool(args.uniform),
        "rows": len(rows),
        "outputs": [out.name],
        "seed": None,
    })
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    model, model_id = resolve_model(args.model)
    statistic = default_statistic(model, args.null, args.alt)
    if args.ranking_file:
        ranking = _load_ranking(model, args.ranking_file)
        ok, witness = verify_agreement(model, statistic, ranking)
        if not ok:
            print(f"ranking does not agree with the statistic; witness pair {witness}", file=sys.stderr)
            return 2
    else:
        ranking = build_agreeing_ranking(model, statistic)
    if args.thetas is None:
        thetas = list(model.parameter_names)
    else:
        thetas = [t for t in args.thetas.split(",") if t]
        for theta in thetas:
            if theta not in model.parameter_names:
                raise CliError(f"unknown parameter {theta!r}")
    reports = verify_all_claims(model, statistic, ranking, thetas, t_grid_size=args.t_grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "reports.json").write_text(reports_to_json(reports), encoding="utf-8")
    text = reports_to_text(reports)
    (out / "reports.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    _write_manifest(out, {
        "command": "verify",
        "model": model_id,
        "thetas": thetas,
        "t_grid": args.t_grid,
        "ranking_file": bool(args.ranking_file),
        "claims": [r.claim for r in reports],
        "outputs": ["reports.json", "reports.txt"],
        "seed": None,
    })
    return 0 if all(r.verdict != "fail" for r in reports) else 1


def _read_config(spec: str) -> tuple[dict, str]:
    path = Path(spec)
    if path.exists():
        raw = path.read_text(encoding="utf-8")
    else:
        try:
            raw = (resources.files("mdpvalues") / "configs" / f"{spec}.json").read_text(encoding="utf-8")
        except (FileNotFoundError, ModuleNotFoundError):
            raise CliError(f"config {spec!r} is neither a file nor a bundled config") from None
    try:
        return json.loads(raw), hashlib.sha256(raw.encode()).hexdigest()
    except json.JSONDecodeError as exc:
        raise CliError(f"invalid config JSON: {exc}") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    data, digest = _read_config(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.alpha is not None:
        data["alpha"] = args.alpha
    model, model_id = resolve_model(str(data.get("model", "")))
    config = config_from_dict(data, model, model_id)
    report = simulate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
    fh, writer = _csv_writer(out / "summary.csv")
    with fh:
        writer.writerow(["procedure", "family", "u_policy", "alpha", "fdr", "fdr_mcse", "power", "dep_rate"])
        writer.writerow(report.summary_row())
    _write_manifest(out, {
        "command": "simulate",
        "config_sha256": digest,
        "config": report.config,
        "rng": RNG_IDENTITY,
        "seed": config.seed,
        "outputs": ["report.json", "summary.csv"],
    })
    return 0


def cmd_pvalues(args: argparse.Namespace) -> int:
    model, model_id = resolve_model(args.model)
    statistic = default_statistic(model, args.null, args.alt)
    ranking = build_agreeing_ranking(model, statistic)
    out = Path(args.out)
    write_pvalue_table(out, model, statistic, ranking, _FAMILY_FLAGS[args.family])
    _write_manifest(out, {
        "command": "pvalues",
        "model": model_id,
        "family": args.family,
        "rows": model.size,
        "outputs": [out.name],
        "seed": None,
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdpv",
        description="Exact discrete p-value constructions, ordering verification, and downstream simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="emit the worked five-coin table as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("cdf", help="emit p-value CDF step data as CSV")
    p.add_argument("--model", required=True, help="builtin name, binomial:n,t0,t1, or JSON path")
    p.add_argument("--family", choices=("t", "md"), default="t")
    p.add_argument("--theta", default=None, help="parameter name (default: the null)")
    p.add_argument("--u", choices=("natural", "mid", "rand"), default="natural")
    p.add_argument("--uniform", action="store_true", help="emit the exact diagonal reference instead")
    p.add_argument("--null", default=None)
    p.add_argument("--alt", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("verify", help="run the C1-C9 claim suite")
    p.add_argument("--model", required=True)
    p.add_argument("--thetas", default=None, help="comma-separated parameter grid (default: all)")
    p.add_argument("--ranking-file", default=None, help="JSON array of labels, rank 1 first")
    p.add_argument("--null", default=None)
    p.add_argument("--alt", default=None)
    p.add_argument("--t-grid", type=int, default=200)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run a seeded Monte Carlo study from a JSON config")
    p.add_argument("--config", required=True, help="config path or bundled config name")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--alpha", default=None, help="override the config alpha (num/den)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pvalues", help="emit the per-point p-value table as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--family", choices=("t", "md"), default="md")
    p.add_argument("--null", default=None)
    p.add_argument("--alt", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pvalues)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, ModelError, RankingError, TestingError, OrdersError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
