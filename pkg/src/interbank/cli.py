"""Command-line interface: ``interbank {ingest,metrics,generate,sweep,cascade}``.

Every CSV written here starts with ``# key: <json>`` metadata lines (tool
version, seed, full parameters, creation time) followed by a plain CSV body.
Exit codes: 0 success, 2 usage or validation error, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import metrics as M
from .contagion import ContagionParams, buffer_sweep, build_balance_sheets, cascade
from .ingest import IngestError, daily_networks, read_edges, read_transactions, write_edges
from .synth import GeneratorConfig, generate_with_report

log = logging.getLogger("interbank")

TOOL = f"interbank {__version__}"


class UsageError(ValueError):
    pass


def _metadata(command: str, args: argparse.Namespace, **extra) -> dict:
    params = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "seed", "verbose")
    }
    meta = {"tool": TOOL, "command": command, "seed": args.seed, "params": params}
    meta.update(extra)
    meta["created"] = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _write_csv(path: Path, meta: dict, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {json.dumps(v, sort_keys=True, default=str)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _outdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_edges(paths):
    nets = []
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"no such edge file: {p}")
        try:
            nets.append(read_edges(p))
        except IngestError as exc:
            raise IngestError(f"{p}: {exc}") from None
    nets.sort(key=lambda n: str(n.date))
    return nets


def _fmt(x: float) -> str:
    return repr(float(x))


def _decimal_str(x: Fraction) -> str:
    """Shortest exact decimal for grid values such as 1/25 -> '0.04'."""
    d = Decimal(x.numerator) / Decimal(x.denominator)
    return format(d.normalize(), "f")


def parse_grid(text: str) -> list[Fraction]:
    """``0.04`` or ``0.04,0.06`` or ``start:stop:step`` (stop inclusive)."""
    try:
        if ":" in text:
            start, stop, step = (Decimal(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise UsageError(f"bad kappa range {text!r}")
            out, k = [], start
            while k <= stop:
                out.append(Fraction(k))
                k += step
            return out
        return [Fraction(Decimal(p)) for p in text.split(",") if p.strip()]
    except InvalidOperation:
        raise UsageError(f"bad kappa value in {text!r}") from None


# ---- ingest ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    log_ = read_transactions(args.transactions)
    if not log_.records:
        raise UsageError("no transactions")
    out = _outdir(args.out)
    meta = _metadata("ingest", args)
    nets = daily_networks(log_)
    rows = []
    for net in nets:
        write_edges(net, out, {k: v for k, v in meta.items()})
        rows.append((net.date.isoformat(), net.n, net.n_edges, str(net.total_exposure())))
    _write_csv(out / "summary.csv", meta, ("date", "n", "k", "total_exposure"), rows)
    print(f"{len(nets)} day(s), {len(log_.universe)} banks, {len(log_.records)} transactions")
    for date, n, k, total in rows:
        print(f"  {date}  N={n}  K={k}  exposure={total}")
    return 0


# ---- metrics --------------------------------------------------------------

def _tail(hist, k_min):
    try:
        fit = M.fit_tail_exponent(hist, k_min)
    except ValueError as exc:
        return {"error": str(exc)}
    return dataclasses.asdict(fit)


def cmd_metrics(args) -> int:
    nets = _load_edges(args.edges)
    out = _outdir(args.out)
    meta = _metadata("metrics", args)

    daily = []
    for net in nets:
        st = M.network_stats(net)
        row = dataclasses.asdict(st)
        row["date"] = str(net.date)
        row["giant_in"] = M.giant_component_criterion(st.z1, st.z2_in) if st.z1 > 0 else None
        row["giant_out"] = M.giant_component_criterion(st.z1, st.z2_out) if st.z1 > 0 else None
        for direction in ("in", "out"):
            for t in args.concentration:
                key = f"concentration_{direction}_k>{t}"
                try:
                    row[key] = M.weight_concentration(net, direction, t)
                except ValueError:
                    row[key] = None
        daily.append(row)

    hist_in = M.degree_histogram(nets, "in")
    hist_out = M.degree_histogram(nets, "out")
    table = M.activity_decomposition(nets, args.thresholds)
    report = {
        "days": len(nets),
        "mean": M.mean_stats(M.network_stats(n) for n in nets),
        "daily": daily,
        "tail_fit": {"in": _tail(hist_in, args.k_min), "out": _tail(hist_out, args.k_min)},
        "decomposition": {
            f"{row}|{cond}": {"mean": table.mean[row, cond], "std": table.std[row, cond]}
            for row in M.DECOMPOSITION_ROWS for cond in table.conditions
        },
        "definitions": {
            "edge_direction": "borrower -> lender",
            "z2": M.Z2_DEFINITION,
            "clustering": "undirected links among in-/out-neighbours; vertices with <2 neighbours excluded",
            "tail_fit": "approximate discrete MLE 1 + n / sum ln(k / (k_min - 1/2)); gamma_lsq is a log-log slope",
            "decomposition_std": "population standard deviation across days",
        },
    }
    with open(out / "stats.json", "w", encoding="utf-8") as fh:
        json.dump({"metadata": meta, **report}, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")

    _write_csv(out / "degree_hist_in.csv", meta, ("k", "count"), sorted(hist_in.items()))
    _write_csv(out / "degree_hist_out.csv", meta, ("k", "count"), sorted(hist_out.items()))
    for target in ("out", "in"):
        curve = M.degree_correlation_curve(nets, target)
        _write_csv(
            out / f"corr_k1out_k2{target}.csv", meta, ("k1_out", f"mean_k2_{target}", "samples"),
            [(k, _fmt(m), c) for k, (m, c) in curve.points.items()],
        )
    _write_csv(
        out / "decomposition.csv", meta, ("row", "condition", "mean", "std"),
        [(row, cond, _fmt(table.mean[row, cond]), _fmt(table.std[row, cond]))
         for row in M.DECOMPOSITION_ROWS for cond in table.conditions],
    )
    text = _stats_table(report, table)
    (out / "stats.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _stats_table(report, table) -> str:
    lines = [f"days: {report['days']}"]
    for name, value in report["mean"].items():
        lines.append(f"  {name:<18}{value:>14.6g}")
    for d in ("in", "out"):
        fit = report["tail_fit"][d]
        if "error" in fit:
            lines.append(f"  gamma_{d:<12}  n/a ({fit['error']})")
        else:
            lines.append(f"  gamma_{d:<12}{fit['gamma']:>14.4f}  (lsq {fit['gamma_lsq']:.4f}, n={fit['n_tail']})")
    head = "".join(f"{c:>16}" for c in table.conditions)
    lines += ["", f"{'':<9}{head}"]
    for row, cells in table.rows():
        lines.append(f"{row:<9}" + "".join(f"{m:>9.1f} ({s:4.1f})" for m, s in cells))
    return "\n".join(lines) + "\n"


# ---- generate -------------------------------------------------------------

def _generate_day(task):
    cfg, day, start = task
    return generate_with_report(cfg.for_day(day), start + dt.timedelta(days=day))


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        n=args.n, gamma_in=args.gamma_in, gamma_out=args.gamma_out, mean_degree=args.mean_degree,
        k_max=args.k_max, weight_scale=args.weight_scale, seed=args.seed,
    )
    if args.days < 1:
        raise UsageError("--days must be >= 1")
    out = _outdir(args.out)
    tasks = [(cfg, d, args.start_date) for d in range(args.days)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_generate_day, tasks))
    else:
        results = [_generate_day(t) for t in tasks]
    base = _metadata("generate", args)
    for day, (net, info) in enumerate(results):
        path = write_edges(net, out, {**base, "day": day, "generator": info})
        print(f"{path}  N={net.n}  K={net.n_edges}  deleted_stubs={info['deleted']}")
    return 0


# ---- sweep / cascade ------------------------------------------------------

def _params(args, kappa) -> ContagionParams:
    return ContagionParams(alpha=Fraction(Decimal(args.alpha)), kappa=kappa, q=Fraction(Decimal(args.q)), anchor=args.anchor)


def cmd_sweep(args) -> int:
    grid = parse_grid(args.kappa)
    if not grid:
        raise UsageError("empty kappa grid")
    if len(set(grid)) != len(grid):
        raise UsageError("duplicate kappa values")
    params = _params(args, grid[0])
    for k in grid:
        params.with_kappa(k)
    nets = _load_edges(args.edges)
    out = _outdir(args.out)
    meta = _metadata("sweep", args, kappa_grid=[_decimal_str(k) for k in grid])
    res = buffer_sweep(nets, params, grid, workers=args.workers, keep_per_seed=args.per_seed)

    _write_csv(
        out / "sweep_mean.csv", meta, ("kappa", "mean_cluster", "mean_cluster_inclusive", "trials"),
        [(_decimal_str(k), _fmt(p.mean), _fmt(p.mean_inclusive), p.trials) for k, p in res.points.items()],
    )
    rows = []
    for k, p in res.points.items():
        for size, count in sorted(p.histogram.items()):
            rows.append((_decimal_str(k), size, size + 1, count, _fmt(count / p.trials)))
    _write_csv(
        out / "cluster_hist.csv", meta,
        ("kappa", "cluster_size", "cluster_size_inclusive", "count", "probability"), rows,
    )
    if args.per_seed:
        with open(out / "per_seed.jsonl", "w", encoding="utf-8") as fh:
            for k, days in res.per_seed.items():
                for net, sizes in zip(nets, days):
                    for bank, size in zip(net.universe, sizes):
                        fh.write(json.dumps({"kappa": _decimal_str(k), "date": str(net.date), "seed": bank, "size": size}) + "\n")
    print(f"{'kappa':>8} {'mean':>10} {'P(>8)':>10}")
    for k, p in res.points.items():
        print(f"{_decimal_str(k):>8} {p.mean:>10.4f} {p.tail_probability(8):>10.4f}")
    return 0


def cmd_cascade(args) -> int:
    net = _load_edges([args.edges])[0]
    params = _params(args, Fraction(Decimal(args.kappa)))
    if args.bank not in net.index:
        raise UsageError(f"unknown bank {args.bank!r}")
    res = cascade(net, build_balance_sheets(net, params), args.bank, params.q)
    print(json.dumps({
        "seed": res.seed,
        "defaulted": sorted(res.defaulted),
        "size": res.size,
        "size_inclusive": res.size_inclusive,
        "rounds": res.rounds,
        "params": params.describe(),
    }, indent=2))
    return 0


# ---- wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interbank", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=TOOL)
    ap.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (recorded in all outputs)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="transaction CSV -> daily edge lists")
    p.add_argument("transactions", help="transaction CSV path, or - for stdin")
    p.add_argument("-o", "--out", type=Path, default=Path("edges"))
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("metrics", help="structural statistics of edge lists")
    p.add_argument("edges", nargs="+")
    p.add_argument("-o", "--out", type=Path, default=Path("metrics"))
    p.add_argument("--k-min", type=int, default=2, help="tail cutoff for exponent fits")
    p.add_argument("--thresholds", type=int, nargs="+", default=[0, 2, 10])
    p.add_argument("--concentration", type=int, nargs="+", default=[10], help="degree thresholds for weight shares")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("generate", help="synthetic calibrated networks")
    p.add_argument("--n", type=int, default=767)
    p.add_argument("--gamma-in", type=float, default=1.92)
    p.add_argument("--gamma-out", type=float, default=2.64)
    p.add_argument("--mean-degree", type=float, default=1.41)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--weight-scale", type=float, default=1_000_000.0)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--start-date", type=dt.date.fromisoformat, default=dt.date(2011, 8, 1))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--out", type=Path, default=Path("synthetic"))
    p.set_defaults(func=cmd_generate)

    for name, helptext in (("sweep", "cluster sizes over a capital-buffer grid"), ("cascade", "single-seed debug run")):
        p = sub.add_parser(name, help=helptext)
        if name == "sweep":
            p.add_argument("edges", nargs="+")
            p.add_argument("--kappa", default="0.04:0.10:0.01", help="value, list a,b,c or range start:stop:step")
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--per-seed", action="store_true", help="also write per_seed.jsonl")
            p.add_argument("-o", "--out", type=Path, default=Path("sweep"))
            p.set_defaults(func=cmd_sweep)
        else:
            p.add_argument("edges")
            p.add_argument("--bank", required=True)
            p.add_argument("--kappa", default="0.04")
            p.set_defaults(func=cmd_cascade)
        p.add_argument("--alpha", default="0.20")
        p.add_argument("--q", default="1")
        p.add_argument("--anchor", choices=("assets", "max"), default="assets")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, InvalidOperation) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
