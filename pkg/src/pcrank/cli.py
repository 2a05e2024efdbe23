"""Command-line interface.

Exit codes: 0 ok, 1 parse or configuration error, 2 method contract
violation (incomplete matrix for EVM/GMM, disconnected graph, solver
failure), 3 not rankable, 4 calibration failure.  Errors are printed to
stderr as a single line ``error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .core import components, is_irreducible, missing_count
from .errors import CalibrationFailedError, PCError
from .indices import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    alpha_index,
    alpha_rankability_bound,
    consistency_index,
    report,
)
from .io import fmt_csv_float, fmt_number, index_csv, parse_matrix_file, write_csv
from .metrics import ordinal
from .montecarlo import (
    DEFAULT_CI_LADDER,
    INDEX_NAMES,
    ExperimentConfig,
    ExperimentRecord,
    Scheme,
    Cell,
    add_distribution,
    add_sensitivity,
    calibrate_ladder,
    run_distribution_study,
    run_sensitivity_study,
)
from .priority import DEFAULT_TOL, evm, gmm, harker_rank

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_NOT_RANKABLE, EXIT_CALIBRATION = 0, 1, 2, 3, 4

DEFAULTS = {
    "alpha": DEFAULT_ALPHA,
    "beta": DEFAULT_BETA,
    "tol": DEFAULT_TOL,
    "seed": 0,
    "n": 9,
    "matrix_count": 1000,
    "ci_targets": "default",
    "ci": 0.1,
    "method": "evm",
    "workers": None,
    "bins": 10,
    "calibration_samples": 500,
    "output": ".",
}

CONFIG_TYPES = {
    "alpha": float, "beta": float, "tol": float, "seed": int, "n": int,
    "matrix_count": int, "ci_targets": str, "ci": float, "method": str,
    "workers": int, "bins": int, "calibration_samples": int, "output": str,
}

SENSITIVITY_AGG_COLUMNS = [
    "index", "ci_group", "ci_target", "ci_avg", "bucket", "bucket_lo", "bucket_hi",
    "count", "excluded", "mean_manhattan", "se_manhattan", "mean_kendall", "se_kendall",
]
DISTRIBUTION_AGG_COLUMNS = [
    "scheme", "k", "count", "excluded", "ci_avg", "mean_manhattan", "se_manhattan",
    "mean_kendall", "se_kendall", "mean_iid_alpha", "mean_ii_beta", "mean_tree_index",
    "mean_compound",
]


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message, EXIT_CONFIG)


def _add_index_params(p):
    p.add_argument("--alpha", type=float, default=None, help="alpha-index exponent (default 1.5)")
    p.add_argument("--beta", type=float, default=None, help="beta-index exponent (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcrank", description="Rank alternatives from (incomplete) pairwise comparisons.")
    parser.add_argument("--version", action="version", version=f"pcrank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rank", help="priority vector of a matrix file")
    p.add_argument("matrix")
    p.add_argument("--method", choices=["evm", "gmm", "harker"], default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--config")

    p = sub.add_parser("indices", help="inconsistency and incompleteness indices")
    p.add_argument("matrix")
    _add_index_params(p)
    p.add_argument("--csv", metavar="PATH", help="also write a one-row CSV ('-' for stdout)")
    p.add_argument("--config")

    p = sub.add_parser("check", help="is the matrix rankable?")
    p.add_argument("matrix")
    _add_index_params(p)
    p.add_argument("--config")

    for name, helptext in (
        ("experiment-sensitivity", "Monte Carlo study over a CI ladder and random removals"),
        ("experiment-distribution", "Monte Carlo study of regular vs irregular removal schemes"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--matrix-count", type=int, default=None)
        if name == "experiment-sensitivity":
            p.add_argument("--ci-targets", default=None, help="comma-separated CI levels or 'default'")
            p.add_argument("--bins", type=int, default=None, help="index buckets on [0, 1]")
        else:
            p.add_argument("--ci", type=float, default=None, help="target mean CI (default 0.1)")
        _add_index_params(p)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--calibration-samples", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--output", "-o", default=None, help="output directory")
        p.add_argument("--config")
    return parser


def read_config(path: str | None) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("config", f"cannot read config {path}: {exc.strerror}", EXIT_CONFIG) from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("config", f"{path}:{lineno}: expected key = value", EXIT_CONFIG)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_TYPES:
            raise CliError("config", f"{path}:{lineno}: unknown key {key!r}", EXIT_CONFIG)
        try:
            out[key] = CONFIG_TYPES[key](value)
        except ValueError:
            raise CliError("config", f"{path}:{lineno}: bad value {value!r} for {key}", EXIT_CONFIG) from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides the defaults."""
    settings = dict(DEFAULTS)
    settings.update(read_config(getattr(args, "config", None)))
    for key, value in vars(args).items():
        if value is not None and key != "config":
            settings[key] = value
    return settings


def _parse_ci_targets(spec) -> tuple[float, ...]:
    if isinstance(spec, str) and spec.strip().lower() == "default":
        return DEFAULT_CI_LADDER
    try:
        return tuple(float(t) for t in str(spec).split(",") if t.strip())
    except ValueError:
        raise CliError("config", f"bad --ci-targets {spec!r}", EXIT_CONFIG) from None


def ranking_string(w) -> str:
    pos = ordinal(w)
    order = sorted(range(len(w)), key=lambda i: (pos[i], i))
    out = f"a{order[0] + 1}"
    for prev, cur in zip(order, order[1:]):
        out += (" = " if pos[prev] == pos[cur] else " > ") + f"a{cur + 1}"
    return out


def _load(path: str):
    try:
        return parse_matrix_file(path)
    except PCError as exc:
        raise CliError(exc.code, str(exc), EXIT_CONFIG) from None


def cmd_rank(args, out) -> int:
    s = resolve(args)
    C = _load(args.matrix)
    method = s["method"]
    lam = ci = None
    if method == "gmm":
        w = gmm(C)
    elif method == "evm":
        res = evm(C, tol=s["tol"])
        w, lam = res.vector, res.lambda_max
        ci = consistency_index(C, res)
    elif method == "harker":
        res = harker_rank(C, tol=s["tol"])
        w, lam = res.vector, res.lambda_max
        if C.is_complete():
            ci = consistency_index(C, res)
    else:
        raise CliError("usage", f"unknown method {method!r}", EXIT_CONFIG)
    print(f"method: {method}", file=out)
    print(f"n: {C.n}", file=out)
    print(f"missing: {missing_count(C)}", file=out)
    print("weights:", file=out)
    for i, x in enumerate(w):
        print(f"  a{i + 1}: {x:.6f}", file=out)
    if lam is not None:
        print(f"lambda_max: {lam:.6f}", file=out)
    if ci is not None:
        print(f"ci: {fmt_number(ci)}", file=out)
    print(f"ranking: {ranking_string(w)}", file=out)
    return EXIT_OK


def cmd_indices(args, out) -> int:
    s = resolve(args)
    C = _load(args.matrix)
    rep = report(C, s["alpha"], s["beta"])
    for key, value in rep.as_dict().items():
        if key == "ci" and value is None:
            value = "n/a (incomplete matrix)"
        elif key == "tree_index" and value is None:
            value = "n/a (undefined for n = 2)"
        else:
            value = fmt_number(value)
        print(f"{key}: {value}", file=out)
    if rep.tree_index is None:
        print("error[undefined-for-order-two]: tree index is undefined for n = 2", file=sys.stderr)
    if args.csv:
        text = index_csv(rep)
        if args.csv == "-":
            out.write(text)
        else:
            Path(args.csv).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_check(args, out) -> int:
    s = resolve(args)
    C = _load(args.matrix)
    rankable = is_irreducible(C)
    rep = report(C, s["alpha"], s["beta"])
    if C.n >= 3:
        bound = alpha_rankability_bound(C.n, s["alpha"])
        a = alpha_index(C, s["alpha"])
        if a > bound * (1 + 1e-12):
            print(
                f"warning: alpha index {fmt_number(a)} exceeds the rankability bound {fmt_number(bound)}",
                file=out,
            )
        elif a >= bound * (1 - 1e-12):
            print(f"warning: alpha index {fmt_number(a)} attains the rankability bound {fmt_number(bound)}", file=out)
    if rep.tree_index == 1.0:
        print("warning: tree index is 1 (no spanning tree)", file=out)
    if rankable:
        print("rankable", file=out)
        return EXIT_OK
    comps = " ".join("{" + ",".join(f"a{i + 1}" for i in c) + "}" for c in components(C))
    print(f"not rankable: components {comps}", file=out)
    return EXIT_NOT_RANKABLE


def _experiment_config(s: dict, ci_targets) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            n=s["n"],
            matrix_count=s["matrix_count"],
            ci_targets=ci_targets,
            alpha=s["alpha"],
            beta=s["beta"],
            seed=s["seed"],
            calibration_samples=s["calibration_samples"],
            tol=s["tol"],
            workers=s["workers"],
        )
    except ValueError as exc:
        raise CliError("config", str(exc), EXIT_CONFIG) from None


def _record_row(r: ExperimentRecord) -> list:
    row = []
    for name in ExperimentRecord.columns():
        v = getattr(r, name)
        if isinstance(v, bool):
            row.append(int(v))
        elif isinstance(v, float):
            row.append(fmt_csv_float(v))
        else:
            row.append(v)
    return row


def _f(x: float) -> str:
    return fmt_csv_float(x) if x == x else ""


def cmd_experiment(args, out) -> int:
    s = resolve(args)
    sensitivity = args.command == "experiment-sensitivity"
    targets = _parse_ci_targets(s["ci_targets"]) if sensitivity else (float(s["ci"]),)
    cfg = _experiment_config(s, targets)
    if s["bins"] < 1:
        raise CliError("config", "bins must be positive", EXIT_CONFIG)
    outdir = Path(s["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        spreads = calibrate_ladder(cfg)
    except CalibrationFailedError as exc:
        raise CliError(exc.code, str(exc), EXIT_CALIBRATION) from None
    run = run_sensitivity_study if sensitivity else run_distribution_study
    cells: dict = {}
    groups: dict[int, Cell] = {}
    excluded = 0

    def rows():
        nonlocal excluded
        for r in run(cfg, spreads):
            excluded += not r.converged
            if sensitivity:
                add_sensitivity(cells, r, s["bins"])
                groups.setdefault(r.ci_group, Cell()).add(r)
            else:
                add_distribution(cells, r)
            yield _record_row(r)

    n_rec = write_csv(outdir / "records.csv", ExperimentRecord.columns(), rows())
    cells = dict(sorted(cells.items()))
    if sensitivity:
        bins = s["bins"]
        agg_rows = [
            [name, g, _f(cfg.ci_targets[g]), _f(c.ci.mean), b, _f(b / bins), _f((b + 1) / bins),
             c.manhattan.count, c.excluded, _f(c.manhattan.mean), _f(c.manhattan.se),
             _f(c.kendall.mean), _f(c.kendall.se)]
            for (name, g, b), c in cells.items()
        ]
        write_csv(outdir / "aggregate.csv", SENSITIVITY_AGG_COLUMNS, agg_rows)
        print(f"{'group':>5} {'ci_target':>9} {'ci_avg':>8} {'mean_Md':>8} {'mean_Krd':>8}", file=out)
        for g, c in sorted(groups.items()):
            print(
                f"{g:>5} {cfg.ci_targets[g]:>9.4f} {c.ci.mean:>8.4f} "
                f"{c.manhattan.mean:>8.4f} {c.kendall.mean:>8.4f}",
                file=out,
            )
    else:
        agg_rows = [
            [scheme, k, c.manhattan.count, c.excluded, _f(c.ci.mean), _f(c.manhattan.mean),
             _f(c.manhattan.se), _f(c.kendall.mean), _f(c.kendall.se)]
            + [_f(c.indices[name].mean) for name in INDEX_NAMES]
            for (scheme, k), c in cells.items()
        ]
        write_csv(outdir / "aggregate.csv", DISTRIBUTION_AGG_COLUMNS, agg_rows)
        ci_avg = cells[(Scheme.REGULAR.value, 0)].ci.mean
        print(f"ci_avg: {fmt_number(ci_avg)}", file=out)
        print(f"{'k':>3} {'Md_regular':>10} {'Md_irregular':>12} {'Krd_regular':>11} {'Krd_irregular':>13}", file=out)
        for k in sorted({k for _, k in cells}):
            reg, irr = cells[(Scheme.REGULAR.value, k)], cells[(Scheme.IRREGULAR.value, k)]
            print(
                f"{k:>3} {reg.manhattan.mean:>10.4f} {irr.manhattan.mean:>12.4f} "
                f"{reg.kendall.mean:>11.4f} {irr.kendall.mean:>13.4f}",
                file=out,
            )
    print(f"records: {n_rec} ({excluded} excluded for non-convergence)", file=out)
    print(f"wrote {outdir / 'records.csv'} and {outdir / 'aggregate.csv'}", file=out)
    return EXIT_OK


COMMANDS = {
    "rank": cmd_rank,
    "indices": cmd_indices,
    "check": cmd_check,
    "experiment-sensitivity": cmd_experiment,
    "experiment-distribution": cmd_experiment,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.status
    except PCError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
