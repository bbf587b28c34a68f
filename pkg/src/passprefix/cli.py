"""Command-line entry point.

    passprefix explore --config FILE [--jobs N] [--out DIR]
    passprefix select --out DIR [--criteria time,energy,size] [--epsilon PCT]
    passprefix mock-demo [--seed N] [--out DIR]

Exit codes: 0 success (possibly with per-config failures recorded), 1 every
benchmark failed, 2 bad config or missing reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ENV_OUT_DIR, ConfigError, load_config
from .selection import AnalysisError, parse_criteria, select_best

logger = logging.getLogger("passprefix")

DEMO_BENCHMARKS = ("crc32", "fibcall", "levenstein")
DEMO_TRANSFORMATIONS = 5
DEMO_TIMESTAMP = "1970-01-01T00:00:00Z"


def cmd_explore(config_path, jobs=None, out=None) -> int:
    from .explore import explore

    try:
        cfg = load_config(config_path, out_dir=out, jobs=jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = explore(cfg)
    s = result.bundle.summary
    print(f"explored {s.benchmark_count} benchmark(s), "
          f"{s.configs_total} configs, {result.invocations} tool invocations; "
          f"reports in {cfg.out_dir}")
    for name, why in result.bundle.skipped:
        print(f"skipped {name}: {why}", file=sys.stderr)
    return result.exit_code


def cmd_select(out_dir, criteria=None, epsilon: float = 0.0, stream=None) -> int:
    from .reporting import read_profile

    stream = stream or sys.stdout
    out_dir = Path(out_dir)
    try:
        crit = parse_criteria(criteria)
        summary = json.loads((out_dir / "summary.json").read_text())
        names = [b["name"] for b in summary["per_benchmark"]]
        lines = []
        for name in names:
            profile, prefix = read_profile(out_dir, name)
            best = profile.result(select_best(profile, epsilon, crit))
            flags = " ".join(prefix + f for f in best.flags)
            lines.append(f"{name}\t{best.label}\t{flags}")
    except (OSError, ValueError, KeyError, AnalysisError) as exc:
        print(f"error: cannot read reports in {out_dir}: {exc}", file=sys.stderr)
        return 2
    for line in lines:
        print(line, file=stream)
    return 0


def write_demo_inputs(seed: int, root) -> Path:
    """Generate the pipeline, cost model, sources and config for a mock exploration."""
    from .mockc import dump_model, random_model, random_pipeline, write_mock_sources
    from .pipeline import serialize_pipeline

    root = Path(root)
    inputs = root / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    pipeline = random_pipeline(seed, DEMO_TRANSFORMATIONS, label=f"mockc seed={seed} -O2")
    model = random_model(seed, pipeline, DEMO_BENCHMARKS)
    (inputs / "pipeline.txt").write_text(serialize_pipeline(pipeline))
    (inputs / "model.txt").write_text(dump_model(model))
    benches = write_mock_sources(model, inputs / "src")
    lines = [
        "[exploration]",
        "pipeline = pipeline.txt",
        "out_dir = ..",
        f"timestamp = {DEMO_TIMESTAMP}",
        "",
        "[toolchain]",
        "runner = mock",
        "mock_model = model.txt",
        "level = -O2",
        "",
        "[measurement]",
        "repeats = 3",
    ]
    for b in benches:
        lines += ["", f"[benchmark {b.name}]", f"sources = src/{b.sources[0].name}"]
    config = inputs / "explore.ini"
    config.write_text("\n".join(lines) + "\n")
    return config


def cmd_mock_demo(seed: int = 42, out=None, stream=None) -> int:
    from .explore import explore

    stream = stream or sys.stdout
    out = Path(out or f"mockc-demo-{seed}")
    cfg = load_config(write_demo_inputs(seed, out))
    result = explore(cfg)
    s = result.bundle.summary
    print(f"mock exploration, seed {seed}: {s.benchmark_count} benchmarks, "
          f"{s.configs_total // max(s.benchmark_count, 1)} configs each", file=stream)
    for b in s.per_benchmark:
        print(f"  {b.name:<12} best {b.best_label:<24} time {b.d_time_pct:+.2f}%  "
              f"energy {b.d_energy_pct:+.2f}%  size {b.d_size_pct:+.2f}%", file=stream)
    if s.mean_time_improvement_pct is not None:
        print(f"mean time change {s.mean_time_improvement_pct:+.2f}%, "
              f"{s.improved_count} improved", file=stream)
    print(f"reports in {out}", file=stream)
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="passprefix", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("explore", help="compile and measure every prefix config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int)
    s.add_argument("--out")

    s = sub.add_parser("select", help="re-run best-config selection on existing reports")
    s.add_argument("--out", default=os.environ.get(ENV_OUT_DIR))
    s.add_argument("--criteria", default="time,energy,size")
    s.add_argument("--epsilon", type=float, default=0.0)

    s = sub.add_parser("mock-demo", help="self-contained exploration with the mock toolchain")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "explore":
        return cmd_explore(args.config, args.jobs, args.out)
    if args.command == "select":
        if not args.out:
            print("error: --out is required", file=sys.stderr)
            return 2
        return cmd_select(args.out, args.criteria, args.epsilon)
    return cmd_mock_demo(args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
