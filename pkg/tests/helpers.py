"""Independent oracles and fixtures shared by the test modules.

The oracles deliberately avoid the package's own code paths: prefixes are
found by brute force over the raw pass list, resources by a left fold over
the model's factor table, and the best config by one lexicographic ``min``
over raw resource tuples.
"""

import functools
import operator
from pathlib import Path

from passprefix.config import ExplorationConfig
from passprefix.measurement import MeasurementPlan
from passprefix.mockc import dump_model, mock_templates, write_mock_sources
from passprefix.pipeline import serialize_pipeline
from passprefix.toolchain import ToolchainSpec


def brute_prefixes(passes):
    """All prefix flag lists of ``[(name, kind)]``, empty one first."""
    out = [[]]
    for cut in range(1, len(passes) + 1):
        if passes[cut - 1][1] == "T":
            out.append([name for name, _ in passes[:cut]])
    return out


def fold_resources(model, bench, n_flags):
    """Base resources times the first ``n_flags`` factor triples, folded left."""
    t0, e0, s0 = model.base[bench]
    triples = model.factors[bench][:n_flags]
    t = functools.reduce(operator.mul, (f[0] for f in triples), t0)
    e = functools.reduce(operator.mul, (f[1] for f in triples), e0)
    s = functools.reduce(operator.mul, (f[2] for f in triples), float(s0))
    return t, e, max(1, round(s))


def oracle_best(model, bench):
    """Config index minimizing (time, energy, size), larger index winning exact ties."""
    names_kinds = [(e.name, e.kind.value) for e in model.pipeline.entries]
    candidates = []
    for index, flags in enumerate(brute_prefixes(names_kinds)):
        if (bench, index) in model.invalid:
            continue
        t, e, s = fold_resources(model, bench, len(flags))
        candidates.append((t, e, s, -index))
    return -min(candidates)[3]


def mock_config(model, root, *, epsilon_pct=0.0, jobs=1, criteria=("time", "energy", "size"),
                repeats=1, warmups=0, timestamp="1970-01-01T00:00:00Z", work_dir=None) -> ExplorationConfig:
    """Write a model, its pipeline and sources under ``root`` and return a mock exploration config.

    Build trees go to ``work_dir`` (default ``root/out/work``).
    """
    root = Path(root)
    inputs = root / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    pipeline_file = inputs / "pipeline.txt"
    pipeline_file.write_text(serialize_pipeline(model.pipeline))
    model_file = inputs / "model.txt"
    model_file.write_text(dump_model(model))
    benches = write_mock_sources(model, inputs / "src")
    out = root / "out"
    work = Path(work_dir) if work_dir is not None else out / "work"
    spec = ToolchainSpec(work_dir=work, label="mockc", **mock_templates())
    return ExplorationConfig(
        pipeline_file=pipeline_file,
        toolchain=spec,
        benchmarks=benches,
        plan=MeasurementPlan(repeats=repeats, min_run_s=0.5, warmups=warmups),
        epsilon_pct=epsilon_pct,
        jobs=jobs,
        out_dir=out,
        criteria=tuple(criteria),
        provider="synthetic",
        runner="mock",
        mock_model=model_file,
        timestamp=timestamp,
    )
