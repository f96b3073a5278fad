"""Benchmark harness: ensemble experiments over (N, alpha, x_max) grids.

Runs ``n_trials`` seeded instances per cell through the selected solvers,
records one row per run, aggregates mean and standard error per cell,
and renders quick-look SVG charts (profit prefactor vs alpha or N with
the theory line overlaid, and log-log timing plots with fitted slopes).
CSV output is deterministic given the config; the timestamp header can
be suppressed for byte-identical reruns.

Cell seeds are decoupled from trial order: the seed of (N, K, x_max,
trial) is the first 8 bytes, little-endian, of
SHA-256(``"{seed_base},{N},{K},{x_max},{trial}"``), so any cell can be
reproduced in isolation.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import GmdkpError
from .greedy import density_greedy_solve, marginal_greedy_solve
from .instance import EnsembleParams, evaluate, generate_instance
from .cavity import IterOpts
from .oracle import exact_optimum
from .replica import find_m_opt
from .svgplot import Series, line_plot

ENGINES = ("bp", "gamp", "greedy", "exact")

RECORD_FIELDS = [
    "n", "k", "alpha", "x_max", "engine", "trial", "seed",
    "profit", "scaled_m", "sweeps_total", "wall_time_ms", "feasible", "error",
]


@dataclass(frozen=True)
class BenchConfig:
    """Grid definition for one benchmark run."""

    n_values: tuple[int, ...] = (50,)
    alpha_values: tuple[float, ...] = (1.0,)
    x_max_values: tuple[int, ...] = (1,)
    n_trials: int = 100
    engines: tuple[str, ...] = ("bp", "greedy")
    seed_base: int = 1
    output_dir: str = "bench_out"
    mean_weight: float = 0.5
    weight_variance: float = 1.0 / 12.0
    capacity_ratio: float = 0.25
    max_sweeps: int = 300
    tol: float = 1e-6
    damping: float = 0.7
    warm_start: bool = True
    theory: bool = True
    timestamp: bool = True

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        bad = [e for e in self.engines if e not in ENGINES]
        if bad:
            raise ValueError(f"unknown engines {bad}; valid: {ENGINES}")


@dataclass
class BenchRecord:
    """One solver run on one instance."""

    n: int
    k: int
    alpha: float
    x_max: int
    engine: str
    trial: int
    seed: int
    profit: float = math.nan
    scaled_m: float = math.nan
    sweeps_total: int = 0
    wall_time_ms: float = math.nan
    feasible: bool = False
    error: str = ""

    def row(self, with_times: bool = True) -> list[str]:
        # timing is inherently non-reproducible, so reproducible mode blanks it
        return [
            str(self.n), str(self.k), format(self.alpha, ".17g"), str(self.x_max),
            self.engine, str(self.trial), str(self.seed),
            format(self.profit, ".17g"), format(self.scaled_m, ".17g"),
            str(self.sweeps_total),
            format(self.wall_time_ms, ".3f") if with_times else "",
            str(int(self.feasible)), self.error,
        ]


def cell_seed(seed_base: int, n: int, k: int, x_max: int, trial: int) -> int:
    """Documented hash: first 8 bytes (LE) of SHA-256 of the cell string."""
    key = f"{seed_base},{n},{k},{x_max},{trial}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def parse_config(text: str) -> BenchConfig:
    """Parse line-oriented ``key = value`` text; lists are comma-separated."""
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("n", "n_values"):
            kw["n_values"] = tuple(int(v) for v in value.split(","))
        elif key in ("alpha", "alpha_values"):
            kw["alpha_values"] = tuple(float(v) for v in value.split(","))
        elif key in ("x_max", "x_max_values"):
            kw["x_max_values"] = tuple(int(v) for v in value.split(","))
        elif key == "engines":
            kw["engines"] = tuple(v.strip() for v in value.split(","))
        elif key == "n_trials":
            kw["n_trials"] = int(value)
        elif key == "seed_base":
            kw["seed_base"] = int(value)
        elif key == "output_dir":
            kw["output_dir"] = value
        elif key in ("mean_weight", "weight_variance", "capacity_ratio", "tol", "damping"):
            kw[key] = float(value)
        elif key == "max_sweeps":
            kw["max_sweeps"] = int(value)
        elif key in ("warm_start", "theory", "timestamp"):
            kw[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return BenchConfig(**kw)


def _run_one(config: BenchConfig, n: int, alpha: float, x_max: int, engine: str, trial: int) -> BenchRecord:
    params = EnsembleParams(
        n_items=n, alpha=alpha, mean_weight=config.mean_weight,
        weight_variance=config.weight_variance, capacity_ratio=config.capacity_ratio,
        x_max=x_max, seed=0,
    )
    k = params.n_constraints
    seed = cell_seed(config.seed_base, n, k, x_max, trial)
    params = EnsembleParams(
        n_items=n, alpha=alpha, mean_weight=config.mean_weight,
        weight_variance=config.weight_variance, capacity_ratio=config.capacity_ratio,
        x_max=x_max, seed=seed,
    )
    rec = BenchRecord(n=n, k=k, alpha=alpha, x_max=x_max, engine=engine, trial=trial, seed=seed)
    instance = generate_instance(params)
    opts = IterOpts(max_sweeps=config.max_sweeps, tol=config.tol, damping=config.damping)
    t0 = time.perf_counter()
    try:
        if engine in ("bp", "gamp"):
            trace = marginal_greedy_solve(instance, engine, opts, warm_start=config.warm_start, params=params)
            rec.sweeps_total = int(sum(trace.sweeps_per_pick))
            ev = trace.final_evaluation
        elif engine == "greedy":
            trace = density_greedy_solve(instance, params=params)
            ev = trace.final_evaluation
        else:
            result = exact_optimum(instance)
            ev = evaluate(instance, result.best_selection, params)
        rec.profit = ev.profit
        rec.scaled_m = ev.scaled_m if ev.scaled_m is not None else math.nan
        rec.feasible = ev.feasible
    except GmdkpError as err:
        rec.error = f"{type(err).__name__}: {err}"
    rec.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return rec


def _worker(args) -> BenchRecord:
    return _run_one(*args)


def run_bench(config: BenchConfig) -> list[BenchRecord]:
    """Run every cell x engine x trial; rows come back sorted by cell."""
    jobs = [
        (config, n, alpha, x_max, engine, trial)
        for n in config.n_values
        for alpha in config.alpha_values
        for x_max in config.x_max_values
        for engine in config.engines
        for trial in range(config.n_trials)
    ]
    workers = int(os.environ.get("GMDKP_THREADS", "1") or "1")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, jobs, chunksize=4))
    else:
        records = [_run_one(*job) for job in jobs]
    records.sort(key=lambda r: (r.n, r.k, r.alpha, r.x_max, r.engine, r.trial))
    return records


def records_csv(records: list[BenchRecord], timestamp: bool = True) -> str:
    """Raw rows; with ``timestamp=False`` output is byte-reproducible
    (header line suppressed and the wall-time column left blank)."""
    out = io.StringIO()
    if timestamp:
        out.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for rec in records:
        writer.writerow(rec.row(with_times=timestamp))
    return out.getvalue()


def aggregate(records: list[BenchRecord]):
    """Mean and standard error of profit/scaled_m/time per cell.

    Standard error is sample-stddev/sqrt(n_trials), recomputable from the
    raw rows.  Error rows are excluded and counted.
    """
    cells: dict[tuple, list[BenchRecord]] = {}
    for rec in records:
        cells.setdefault((rec.n, rec.k, rec.alpha, rec.x_max, rec.engine), []).append(rec)
    rows = []
    for key in sorted(cells, key=lambda c: (c[0], c[1], c[2], c[3], c[4])):
        ok = [r for r in cells[key] if not r.error]
        n_err = len(cells[key]) - len(ok)
        if ok:
            profits = np.array([r.profit for r in ok])
            ms = np.array([r.scaled_m for r in ok])
            times = np.array([r.wall_time_ms for r in ok])
            cnt = len(ok)
            se = lambda v: float(v.std(ddof=1) / math.sqrt(cnt)) if cnt > 1 else 0.0
            rows.append({
                "n": key[0], "k": key[1], "alpha": key[2], "x_max": key[3], "engine": key[4],
                "trials": cnt, "errors": n_err,
                "profit_mean": float(profits.mean()), "profit_se": se(profits),
                "scaled_m_mean": float(np.nanmean(ms)), "scaled_m_se": se(ms[~np.isnan(ms)]) if (~np.isnan(ms)).sum() > 1 else 0.0,
                "time_ms_mean": float(times.mean()), "time_ms_se": se(times),
            })
        else:
            rows.append({
                "n": key[0], "k": key[1], "alpha": key[2], "x_max": key[3], "engine": key[4],
                "trials": 0, "errors": n_err,
                "profit_mean": math.nan, "profit_se": math.nan,
                "scaled_m_mean": math.nan, "scaled_m_se": math.nan,
                "time_ms_mean": math.nan, "time_ms_se": math.nan,
            })
    return rows


def summary_csv(rows: list[dict], timestamp: bool = True) -> str:
    out = io.StringIO()
    if timestamp:
        out.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
    fields = list(rows[0].keys()) if rows else ["n"]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([
            ""
            if (not timestamp and key.startswith("time_ms"))
            else (format(v, ".17g") if isinstance(v, float) else str(v))
            for key, v in row.items()
        ])
    return out.getvalue()


def fit_loglog_slope(x: list[float], y: list[float]) -> float:
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def _theory_line(config: BenchConfig, alphas, x_max: int):
    out_x, out_y = [], []
    for alpha in alphas:
        params = EnsembleParams(
            n_items=64, alpha=alpha, mean_weight=config.mean_weight,
            weight_variance=config.weight_variance, capacity_ratio=config.capacity_ratio,
            x_max=x_max, seed=0,
        )
        try:
            out_x.append(alpha)
            out_y.append(find_m_opt(alpha, params).m_opt)
        except GmdkpError:
            out_x.pop()
    return out_x, out_y


def write_outputs(config: BenchConfig, records: list[BenchRecord]) -> list[Path]:
    """Write records.csv, summary.csv, and the SVG charts."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    path = outdir / "records.csv"
    path.write_text(records_csv(records, config.timestamp))
    written.append(path)
    rows = aggregate(records)
    path = outdir / "summary.csv"
    path.write_text(summary_csv(rows, config.timestamp))
    written.append(path)

    solver_rows = [r for r in rows if r["trials"] > 0]
    alphas = sorted({r["alpha"] for r in solver_rows})
    ns = sorted({r["n"] for r in solver_rows})
    xms = sorted({r["x_max"] for r in solver_rows})

    def series_by(xkey: str, fixed: dict) -> list[Series]:
        out = []
        for xm in xms:
            for engine in config.engines:
                pts = [
                    r for r in solver_rows
                    if r["engine"] == engine and r["x_max"] == xm
                    and all(r[k] == v for k, v in fixed.items())
                ]
                if len(pts) > 0:
                    label = engine if len(xms) == 1 else f"{engine} xmax={xm}"
                    out.append(Series(
                        label=label,
                        x=[r[xkey] for r in pts],
                        y=[r["scaled_m_mean"] for r in pts],
                        yerr=[r["scaled_m_se"] for r in pts],
                    ))
        return out

    if len(alphas) > 1:
        for n in ns:
            ser = series_by("alpha", {"n": n})
            if config.theory:
                for xm in xms:
                    tx, ty = _theory_line(config, alphas, xm)
                    if tx:
                        label = "theory" if len(xms) == 1 else f"theory xmax={xm}"
                        ser.append(Series(label=label, x=tx, y=ty, dashed=True))
            path = outdir / f"m_vs_alpha_n{n}.svg"
            path.write_text(line_plot(ser, title=f"profit prefactor vs alpha (N={n})",
                                      xlabel="alpha = K/N", ylabel="scaled profit M"))
            written.append(path)
    if len(ns) > 1:
        for alpha in alphas:
            ser = series_by("n", {"alpha": alpha})
            if config.theory:
                for xm in xms:
                    tx, ty = _theory_line(config, [alpha], xm)
                    if tx:
                        label = "theory" if len(xms) == 1 else f"theory xmax={xm}"
                        ser.append(Series(label=label, x=[min(ns), max(ns)], y=[ty[0], ty[0]], dashed=True))
            path = outdir / f"m_vs_n_alpha{alpha:g}.svg"
            path.write_text(line_plot(ser, title=f"profit prefactor vs N (alpha={alpha:g})",
                                      xlabel="N", ylabel="scaled profit M"))
            written.append(path)

    # timing chart: log-log in N when N varies, else vs alpha
    tser = []
    if len(ns) > 1:
        for engine in config.engines:
            for alpha in alphas:
                for xm in xms:
                    pts = [r for r in solver_rows
                           if r["engine"] == engine and r["alpha"] == alpha and r["x_max"] == xm]
                    if len(pts) > 1:
                        x = [r["n"] for r in pts]
                        y = [max(r["time_ms_mean"], 1e-6) for r in pts]
                        slope = fit_loglog_slope(x, y)
                        tser.append(Series(label=f"{engine} a={alpha:g} (slope {slope:.2f})", x=x, y=y))
        if tser:
            path = outdir / "time_vs_n.svg"
            path.write_text(line_plot(tser, title="wall time vs N", xlabel="N",
                                      ylabel="mean time (ms)", logx=True, logy=True))
            written.append(path)
    elif len(alphas) > 1:
        for engine in config.engines:
            for n in ns:
                for xm in xms:
                    pts = [r for r in solver_rows
                           if r["engine"] == engine and r["n"] == n and r["x_max"] == xm]
                    if len(pts) > 1:
                        tser.append(Series(
                            label=f"{engine} N={n}",
                            x=[r["alpha"] for r in pts],
                            y=[max(r["time_ms_mean"], 1e-6) for r in pts],
                        ))
        if tser:
            path = outdir / "time_vs_alpha.svg"
            path.write_text(line_plot(tser, title="wall time vs alpha", xlabel="alpha",
                                      ylabel="mean time (ms)", logy=True))
            written.append(path)
    return written
