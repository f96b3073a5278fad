import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gmdkp.bench import (
    BenchConfig,
    aggregate,
    cell_seed,
    fit_loglog_slope,
    parse_config,
    records_csv,
    run_bench,
    summary_csv,
    write_outputs,
)


def tiny_config(tmp_path, **kw):
    base = dict(
        n_values=(12,), alpha_values=(0.5,), x_max_values=(1,),
        n_trials=2, engines=("bp", "greedy", "exact"), seed_base=3,
        output_dir=str(tmp_path / "out"), max_sweeps=120, tol=1e-6,
        theory=False, timestamp=False,
    )
    base.update(kw)
    return BenchConfig(**base)


def test_cell_seed_documented_hash():
    import hashlib

    seed = cell_seed(7, 50, 50, 1, 3)
    ref = int.from_bytes(hashlib.sha256(b"7,50,50,1,3").digest()[:8], "little")
    assert seed == ref
    assert cell_seed(7, 50, 50, 1, 4) != seed


def test_parse_config_round_trip():
    text = """
    # bench grid
    n = 20, 50
    alpha = 0.5, 1.0
    x_max = 1
    engines = bp, greedy
    n_trials = 5
    seed_base = 9
    output_dir = results
    timestamp = false
    """
    cfg = parse_config(text)
    assert cfg.n_values == (20, 50)
    assert cfg.alpha_values == (0.5, 1.0)
    assert cfg.engines == ("bp", "greedy")
    assert cfg.n_trials == 5
    assert cfg.seed_base == 9
    assert cfg.output_dir == "results"
    assert cfg.timestamp is False


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("widgets = 3")
    with pytest.raises(ValueError, match="key = value"):
        parse_config("just some words")


def test_run_bench_records_and_bounds(tmp_path):
    cfg = tiny_config(tmp_path)
    records = run_bench(cfg)
    assert len(records) == 2 * 3
    by_engine = {}
    for rec in records:
        assert rec.error == ""
        assert rec.feasible
        by_engine.setdefault(rec.engine, {})[rec.trial] = rec
    for trial in range(2):
        assert by_engine["bp"][trial].profit <= by_engine["exact"][trial].profit + 1e-9
        assert by_engine["greedy"][trial].profit <= by_engine["exact"][trial].profit + 1e-9
        # same instance per trial across engines
        assert by_engine["bp"][trial].seed == by_engine["exact"][trial].seed


def test_csv_determinism(tmp_path):
    cfg = tiny_config(tmp_path)
    a = records_csv(run_bench(cfg), timestamp=False)
    b = records_csv(run_bench(cfg), timestamp=False)
    assert a == b
    assert a.splitlines()[0].startswith("n,k,alpha,x_max,engine,trial,seed,profit")


def test_aggregate_stderr_recomputable(tmp_path):
    cfg = tiny_config(tmp_path, n_trials=4, engines=("greedy",))
    records = run_bench(cfg)
    rows = aggregate(records)
    assert len(rows) == 1
    profits = np.array([r.profit for r in records])
    assert rows[0]["profit_mean"] == pytest.approx(profits.mean())
    assert rows[0]["profit_se"] == pytest.approx(profits.std(ddof=1) / np.sqrt(4))
    text = summary_csv(rows, timestamp=False)
    assert "profit_mean" in text.splitlines()[0]


def test_write_outputs_files(tmp_path):
    cfg = tiny_config(tmp_path, n_values=(10, 14), engines=("greedy",), n_trials=2)
    records = run_bench(cfg)
    written = write_outputs(cfg, records)
    names = {p.name for p in written}
    assert "records.csv" in names
    assert "summary.csv" in names
    svg = [p for p in written if p.suffix == ".svg"]
    assert svg, "expected at least one chart"
    for p in svg:
        assert p.read_text().startswith("<svg")


def test_worker_pool_matches_sequential(tmp_path):
    cfg = tiny_config(tmp_path, engines=("greedy",), n_trials=3)
    seq = records_csv(run_bench(cfg), timestamp=False)
    env_backup = os.environ.get("GMDKP_THREADS")
    os.environ["GMDKP_THREADS"] = "2"
    try:
        par = records_csv(run_bench(cfg), timestamp=False)
    finally:
        if env_backup is None:
            os.environ.pop("GMDKP_THREADS", None)
        else:
            os.environ["GMDKP_THREADS"] = env_backup
    assert seq == par


def test_fit_loglog_slope():
    x = [10, 20, 40]
    y = [5.0 * v**2 for v in x]
    assert fit_loglog_slope(x, y) == pytest.approx(2.0, abs=1e-12)


def run_cli(*args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "gmdkp.cli", *args],
        capture_output=True, text=True, **kw,
    )


def test_cli_gen_solve_pipeline(tmp_path):
    path = tmp_path / "a.gmdkp"
    out = run_cli("gen", "--n", "10", "--alpha", "1", "--seed", "1", "--out", str(path))
    assert out.returncode == 0
    assert path.exists()
    out = run_cli("solve", str(path), "--engine", "bp", "--max-sweeps", "200")
    assert out.returncode == 0
    assert "profit" in out.stdout
    assert "sweeps_total" in out.stdout
    out = run_cli(
        "solve", "--n", "10", "--alpha", "0.5", "--seed", "2", "--engine", "gamp",
        "--trace", str(tmp_path / "t.csv"),
    )
    assert out.returncode == 0
    assert "scaled_m" in out.stdout
    assert (tmp_path / "t.csv").read_text().startswith("pick,item,sweeps,converged")


def test_cli_exact_budget_refusal(tmp_path):
    out = run_cli("exact", "--n", "50", "--alpha", "1", "--seed", "1")
    assert out.returncode == 1
    assert "BudgetExceededError" in out.stderr


def test_cli_exact_small(tmp_path):
    out = run_cli("exact", "--n", "10", "--alpha", "0.5", "--seed", "4")
    assert out.returncode == 0
    assert out.stdout.startswith("profit ")


def test_cli_theory_writes_curve(tmp_path):
    curve = tmp_path / "curve.csv"
    out = run_cli("theory", "--alpha", "0.25", "--xmax", "1", "--curve", str(curve))
    assert out.returncode == 0
    assert "m_opt" in out.stdout
    header = curve.read_text().splitlines()[0]
    assert header == "M,S,Q,q,Q_hat,q_hat,M_hat,residual"


def test_cli_bench_deterministic_rerun(tmp_path):
    args = [
        "bench", "--n", "10", "--alpha", "0.5", "--xmax", "1",
        "--engines", "greedy", "--trials", "2", "--seed-base", "5",
        "--no-theory", "--no-timestamp",
    ]
    out1 = run_cli(*args, "--out", str(tmp_path / "r1"))
    out2 = run_cli(*args, "--out", str(tmp_path / "r2"))
    assert out1.returncode == 0 and out2.returncode == 0
    for name in ("records.csv", "summary.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_cli_bench_config_file(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(
        "n = 10\nalpha = 0.5\nengines = greedy\nn_trials = 2\n"
        f"output_dir = {tmp_path / 'out'}\ntheory = false\ntimestamp = false\n"
    )
    out = run_cli("bench", "--config", str(cfg))
    assert out.returncode == 0
    assert (tmp_path / "out" / "records.csv").exists()
