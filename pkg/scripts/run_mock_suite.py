#!/usr/bin/env python3
"""Arithmetic reproduction of the suite-level averages on the mock toolchain.

Builds a 64-transformation mock -O2 level and a 71-benchmark cost model whose
per-benchmark best time deltas are fixed in advance (38 improved, mean -5.3%),
runs the full explore loop over it and prints the resulting summary.

    python3 scripts/run_mock_suite.py --out results/mock-suite
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from passprefix.config import ExplorationConfig
from passprefix.explore import explore
from passprefix.measurement import MeasurementPlan
from passprefix.mockc import (
    dump_model,
    mock_templates,
    random_pipeline,
    suite_deltas,
    targeted_model,
    write_mock_sources,
)
from passprefix.pipeline import serialize_pipeline
from passprefix.toolchain import ToolchainSpec


def build_inputs(out: Path, args):
    inputs = out / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    pipeline = random_pipeline(args.seed, args.transformations, args.analyses,
                               label=f"mockc seed={args.seed} -O2")
    deltas = suite_deltas(args.seed, n=args.benchmarks, improved=args.improved, mean=args.mean)
    names = [f"bench{i:02d}" for i in range(args.benchmarks)]
    model = targeted_model(args.seed, pipeline, dict(zip(names, deltas)))
    (inputs / "pipeline.txt").write_text(serialize_pipeline(pipeline))
    (inputs / "model.txt").write_text(dump_model(model))
    benches = write_mock_sources(model, inputs / "src")
    return ExplorationConfig(
        pipeline_file=inputs / "pipeline.txt",
        toolchain=ToolchainSpec(work_dir=out / "work", label="mockc", **mock_templates()),
        benchmarks=benches,
        plan=MeasurementPlan(repeats=1, warmups=0),
        jobs=args.jobs,
        out_dir=out,
        provider="synthetic",
        runner="mock",
        mock_model=inputs / "model.txt",
        timestamp="1970-01-01T00:00:00Z",
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/mock-suite"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--transformations", type=int, default=64)
    ap.add_argument("--analyses", type=int, default=80)
    ap.add_argument("--benchmarks", type=int, default=71)
    ap.add_argument("--improved", type=int, default=38)
    ap.add_argument("--mean", type=float, default=-5.3)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    cfg = build_inputs(args.out, args)
    t0 = time.perf_counter()
    res = explore(cfg)
    doc = json.loads((args.out / "summary.json").read_text())
    print(f"{doc['benchmark_count']} benchmarks x {args.transformations + 1} configs "
          f"in {time.perf_counter() - t0:.1f} s ({res.invocations} tool invocations)")
    print(f"mean time change {doc['mean_time_improvement_pct']:+.2f}% "
          f"(target {args.mean:+.2f}%), {doc['improved_count']} improved by >= 1%")
    if doc["improvement_range_pct"]:
        lo, hi = doc["improvement_range_pct"]
        print(f"improvements range from {lo:+.2f}% to {hi:+.2f}%")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
