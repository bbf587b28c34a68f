"""Acceptance gate: one group of tests per numbered criterion.

The terminal summary prints a PASS/FAIL line per criterion (see conftest).
"""

import csv
import json
import math
import random
import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

from passprefix.cli import cmd_mock_demo, main
from passprefix.explore import explore
from passprefix.measurement import MeasurementPlan, TimerProvider, calibrate, measure
from passprefix.mockc import random_model, random_pipeline, suite_deltas, targeted_model
from passprefix.pipeline import PassPipeline, generate_configs, load_pipeline
from passprefix.selection import improvement_pct
from passprefix.toolchain import BenchmarkSpec

from helpers import brute_prefixes, mock_config, oracle_best

ROOT = Path(__file__).resolve().parents[1]


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


# -- 1 ----------------------------------------------------------------------

@acceptance(1, "N transformations give N+1 prefix configs")
@pytest.mark.parametrize("n", [0, 1, 5, 50, 64])
def test_prefix_count(n):
    t0 = time.perf_counter()
    rng = random.Random(n)
    for trial in range(20):
        pipeline = random_pipeline(rng.randrange(10**6), n, rng.randint(0, 2 * n + 3))
        pairs = [(e.name, e.kind.value) for e in pipeline.entries]
        configs = generate_configs(pipeline)
        assert len(configs) == n + 1
        assert [list(c.flags) for c in configs] == brute_prefixes(pairs)
        for c in configs:
            assert list(c.flags) == pipeline.names[: c.total_flags]
            if c.index:
                assert pairs[c.total_flags - 1][1] == "T"
            else:
                assert c.flags == ()
    assert time.perf_counter() - t0 < 1.0


@acceptance(1, "N transformations give N+1 prefix configs")
def test_prefix_count_on_reconstructed_level():
    p = load_pipeline(ROOT / "samples" / "pipelines" / "llvm5.0-O2.txt")
    assert len(generate_configs(p)) == p.transformation_count + 1


# -- 2 ----------------------------------------------------------------------

@acceptance(2, "explorer best equals brute-force lexicographic scan")
def test_oracle_equivalence(tmp_path, scratch):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    checked = 0
    for trial in range(20):
        n = rng.randint(5, 64)
        k = rng.randint(3, 10)
        seed = rng.randrange(10**6)
        pipeline = random_pipeline(seed, n, rng.randint(0, n))
        names = [f"bench{i}" for i in range(k)]
        invalid = {(b, rng.randint(0, n)) for b in names if rng.random() < 0.3}
        model = random_model(seed, pipeline, names, invalid=invalid)
        res = explore(mock_config(model, tmp_path / str(trial), epsilon_pct=0.0,
                                  work_dir=scratch / str(trial)))
        assert res.exit_code == 0
        for b in names:
            if (b, n) in invalid:
                assert b in [s for s, _ in res.bundle.skipped]
                continue
            (profile,) = [p for p in res.bundle.profiles if p.benchmark == b]
            assert profile.best_config_index == oracle_best(model, b)
            checked += 1
    elapsed = time.perf_counter() - t0
    print(f"\n{checked} benchmark selections matched the oracle in {elapsed:.1f} s")
    assert elapsed < 30.0


# -- 3 ----------------------------------------------------------------------

@acceptance(3, "improvement arithmetic")
def test_improvement_illustration():
    assert improvement_pct(80, 100) == -20.0


@acceptance(3, "improvement arithmetic")
def test_improvement_random_cross_check():
    rng = random.Random(3)
    for _ in range(10_000):
        b = math.exp(rng.uniform(-20, 20))
        v = b * math.exp(rng.uniform(-3, 3))
        direct = (v - b) / b * 100
        got = improvement_pct(v, b)
        assert math.isclose(got, direct, rel_tol=1e-9, abs_tol=1e-12)


# -- 4 ----------------------------------------------------------------------

@acceptance(4, "label is '<last transformation> (<flags>)'")
def test_label_at_flag_91():
    rng = random.Random(4)
    passes = [(f"p{i}", rng.choice("TA")) for i in range(90)]
    passes += [("loop-deletion", "T")]
    passes += [(f"q{i}", rng.choice("TA")) for i in range(40)]
    configs = generate_configs(PassPipeline.from_passes(passes))
    cut = [c for c in configs if c.last_transformation == "loop-deletion"]
    assert [c.label for c in cut] == ["loop-deletion (91)"]
    assert cut[0].flags == tuple(n for n, _ in passes[:91])


# -- 5 ----------------------------------------------------------------------

@acceptance(5, "less is more: interior best and the -5.3% suite mean")
def test_late_slowdown_gives_interior_best(tmp_path):
    pipeline = random_pipeline(5, 20, 12)
    model = random_model(5, pipeline, ["levenstein"], time_mu=-0.01, time_sigma=0.005)
    last_t = max(e.position for e in pipeline.entries if e.is_transformation)
    model.factors["levenstein"][last_t] = (1.3, 1.3, 1.0)
    res = explore(mock_config(model, tmp_path))
    best = res.bundle.profiles[0].best
    assert 0 < best.config_index < pipeline.transformation_count
    assert best.d_time_pct <= -5.0
    print(f"\nbest {best.label}, time {best.d_time_pct:+.2f}%")


@acceptance(5, "less is more: interior best and the -5.3% suite mean")
def test_suite_mean_reproduction(tmp_path, scratch):
    t0 = time.perf_counter()
    pipeline = random_pipeline(64, 64, 80, label="mockc 64-transformation -O2")
    deltas = suite_deltas(7, n=71, improved=38, mean=-5.3)
    names = [f"bench{i:02d}" for i in range(71)]
    model = targeted_model(3, pipeline, dict(zip(names, deltas)))
    cfg = mock_config(model, tmp_path, work_dir=scratch)
    explore(cfg)
    doc = json.loads((cfg.out_dir / "summary.json").read_text())
    elapsed = time.perf_counter() - t0
    print(f"\nmean {doc['mean_time_improvement_pct']}%, {doc['improved_count']}/"
          f"{doc['benchmark_count']} improved, {elapsed:.1f} s")
    assert doc["benchmark_count"] == 71
    assert abs(doc["mean_time_improvement_pct"] - (-5.3)) <= 0.05
    assert doc["improved_count"] == 38
    assert elapsed < 10.0


# -- 6 ----------------------------------------------------------------------

@acceptance(6, "validation failures are marked and never selected")
def test_validation_gating(tmp_path):
    model = random_model(7, random_pipeline(7, 10, 6), ["crc32", "fibcall", "nsichneu"])
    victim = oracle_best(model, "crc32")
    assert victim < model.pipeline.transformation_count  # fixture: best is not the baseline
    model.invalid.add(("crc32", victim))
    cfg = mock_config(model, tmp_path)
    res = explore(cfg)
    rows = list(csv.DictReader((cfg.out_dir / "crc32" / "profile.csv").open()))
    statuses = {int(r["config_index"]): r["status"] for r in rows}
    assert statuses[victim] == "ValidationFailed"
    assert [i for i, s in statuses.items() if s != "Built"] == [victim]
    assert rows[victim]["d_time_pct"] == ""
    profile = res.bundle.profiles[0]
    assert profile.best_config_index != victim
    assert profile.best_config_index == oracle_best(model, "crc32")


# -- 7 ----------------------------------------------------------------------

@acceptance(7, "deterministic demo and zero-rebuild resume")
def test_demo_is_byte_identical(tmp_path, capsys):
    assert cmd_mock_demo(42, tmp_path / "a") == 0
    assert cmd_mock_demo(42, tmp_path / "b") == 0
    a = (tmp_path / "a" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "summary.json").read_bytes()
    for bench in ("crc32", "fibcall", "levenstein"):
        for name in ("profile.csv", "profile.dat", "profile.json"):
            assert (tmp_path / "a" / bench / name).read_bytes() == \
                (tmp_path / "b" / bench / name).read_bytes()


@acceptance(7, "deterministic demo and zero-rebuild resume")
def test_rerun_performs_no_rebuilds(tmp_path):
    model = random_model(7, random_pipeline(7, 12, 8), ["crc32", "fibcall"])
    cfg = mock_config(model, tmp_path)
    first = explore(cfg)
    before = (cfg.out_dir / "summary.json").read_bytes()
    again = explore(cfg)
    assert first.invocations > 0
    assert again.invocations == 0
    assert again.measured == 0
    assert (cfg.out_dir / "summary.json").read_bytes() == before


@acceptance(7, "deterministic demo and zero-rebuild resume")
def test_demo_rerun_in_place(tmp_path, capsys):
    cmd_mock_demo(42, tmp_path)
    before = (tmp_path / "summary.json").read_bytes()
    cmd_mock_demo(42, tmp_path)
    assert (tmp_path / "summary.json").read_bytes() == before
    capsys.readouterr()
    main(["explore", "--config", str(tmp_path / "inputs" / "explore.ini")])
    assert "0 tool invocations" in capsys.readouterr().out


# -- 8 ----------------------------------------------------------------------

STUB = """\
import sys, time
time.sleep(0.05 * int(sys.argv[1]))
"""


@acceptance(8, "timer provider and calibration sanity")
def test_timer_on_50ms_stub(tmp_path):
    stub = tmp_path / "stub.py"
    stub.write_text(STUB)
    # -S: site-packages .pth hooks add ~40 ms per launch here, which is not the stub's work
    bench = BenchmarkSpec("sleep50", [stub], run_cmd=f"{sys.executable} -S {{input}} {{loops}}")
    provider = TimerProvider()
    plan = MeasurementPlan(repeats=3, min_run_s=0.5, warmups=0)
    loops = calibrate(stub, bench, provider, plan)
    m = measure(stub, bench, provider, plan, loops, size=1)
    print(f"\n{loops} loops, {m.exec_time_s * 1000:.2f} ms per iteration")
    assert abs(m.exec_time_s - 0.05) <= 0.005


@acceptance(8, "timer provider and calibration sanity")
def test_calibration_of_1ms_stub():
    def launch(executable, bench, loop_count):
        time.sleep(0.001 * loop_count)

    bench = BenchmarkSpec("sleep1", ["stub"])
    loops = calibrate("stub", bench, TimerProvider(launcher=launch), MeasurementPlan(min_run_s=0.5))
    assert loops == 512


# -- 9 ----------------------------------------------------------------------

def _legacy_opt_args():
    if not (shutil.which("opt") and shutil.which("llc") and shutil.which("clang")):
        return None
    proc = subprocess.run(["opt", "-O2", "-debug-pass=Arguments", "-disable-output", "/dev/null"],
                          capture_output=True, text=True)
    if proc.returncode != 0 or "Pass Arguments:" not in proc.stderr:
        return None
    return proc.stderr


@acceptance(9, "optional real-toolchain smoke (non-gating)")
@pytest.mark.toolchain
def test_real_toolchain_smoke(tmp_path):
    args = _legacy_opt_args()
    if args is None:
        pytest.skip("no legacy-pass-manager opt/llc/clang on PATH")
    sys.path.insert(0, str(ROOT / "scripts"))
    from structure_to_pipeline import to_pipeline
    from passprefix.config import load_config
    from passprefix.pipeline import serialize_pipeline

    (tmp_path / "pipeline.txt").write_text(serialize_pipeline(to_pipeline(args, "host opt -O2")))
    ini = (ROOT / "samples" / "clang-opt.ini").read_text()
    ini = ini.replace("pipeline = pipelines/llvm5.0-O2.txt", f"pipeline = {tmp_path / 'pipeline.txt'}")
    ini = ini.replace("c/", str(ROOT / "samples" / "c") + "/")
    ini = ini.replace("repeats = 5", "repeats = 1").replace("min_run_s = 0.5", "min_run_s = 0.05")
    (tmp_path / "x.ini").write_text(ini + "\n")
    cfg = load_config(tmp_path / "x.ini", out_dir=str(tmp_path / "out"))
    cfg.benchmarks = cfg.benchmarks[:1]
    res = explore(cfg)
    (profile,) = res.bundle.profiles
    assert all(r.status.value == "Built" for r in profile.results)
