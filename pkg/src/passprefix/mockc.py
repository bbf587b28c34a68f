"""Deterministic mock toolchain and multiplicative cost model.

The mock tools understand the same command templates as a real toolchain::

    mockc frontend -o OUT SRC...
    mockc opt -o OUT IN [-pass ...]
    mockc backend --level=LEVEL -o OUT IN
    mockc link --level=LEVEL -o OUT IN
    mockc run EXE            exit 0 when the binary is valid
    mockc size EXE           prints "text=<size_b>"
    mockc measure EXE N      prints a provider JSON object for N loops

They run in-process through ``MockRunner`` or as a real program via
``python -m passprefix.mockc --model MODEL ...``. The optimizer refuses any
pass list that is not a prefix of the model's pipeline, so a reordering bug
anywhere upstream fails loudly.
"""

from __future__ import annotations

import io
import json
import math
import random
import re
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .measurement import MeasurementError, RunSample
from .pipeline import OptConfig, PassKind, PassPipeline
from .toolchain import BenchmarkSpec, SubprocessRunner, ToolchainSpec

__all__ = [
    "ModelError",
    "CostModel",
    "MockBinary",
    "model_resources",
    "random_pipeline",
    "random_model",
    "targeted_model",
    "suite_deltas",
    "dump_model",
    "parse_model",
    "load_model",
    "MockRunner",
    "SyntheticProvider",
    "mock_toolchain",
    "mock_templates",
    "write_mock_sources",
    "main",
]

Triple = tuple[float, float, float]
IDENTITY: Triple = (1.0, 1.0, 1.0)


class ModelError(ValueError):
    pass


@dataclass
class CostModel:
    seed: int
    pipeline: PassPipeline
    base: dict[str, tuple[float, float, int]]
    factors: dict[str, list[Triple]]
    invalid: set[tuple[str, int]] = field(default_factory=set)

    def __post_init__(self):
        n = len(self.pipeline)
        for bench, fs in self.factors.items():
            if len(fs) != n:
                raise ModelError(f"{bench}: {len(fs)} factors for {n} pipeline entries")
            if any(f <= 0 for triple in fs for f in triple):
                raise ModelError(f"{bench}: factors must be positive")
        for bench, (t, e, s) in self.base.items():
            if t <= 0 or e <= 0 or s <= 0:
                raise ModelError(f"{bench}: base resources must be positive")
            if bench not in self.factors:
                raise ModelError(f"{bench}: no factors")

    @property
    def benchmarks(self) -> list[str]:
        return list(self.base)


@dataclass(frozen=True)
class MockBinary:
    benchmark: str
    config_index: int
    time_s: float
    energy_j: float
    size_b: int
    valid: bool = True

    def encode(self) -> str:
        line = (f"benchmark={self.benchmark} config_index={self.config_index} "
                f"time_s={self.time_s!r} energy_j={self.energy_j!r} size_b={self.size_b}")
        if not self.valid:
            line += " valid=0"
        return line + "\n"

    @classmethod
    def decode(cls, text: str) -> "MockBinary":
        try:
            fields = dict(tok.split("=", 1) for tok in text.split())
            return cls(
                benchmark=fields["benchmark"],
                config_index=int(fields["config_index"]),
                time_s=float(fields["time_s"]),
                energy_j=float(fields["energy_j"]),
                size_b=int(fields["size_b"]),
                valid=fields.get("valid", "1") != "0",
            )
        except (KeyError, ValueError) as exc:
            raise ModelError(f"corrupted mock binary: {text[:80]!r}") from exc


def _prefix_positions(model: CostModel, flags: Sequence[str]) -> int:
    names = model.pipeline.names
    n = len(flags)
    if list(flags) != names[:n]:
        raise ModelError("pass list is not a prefix of the model pipeline")
    return n


def _resources(model: CostModel, benchmark: str, n_flags: int) -> tuple[float, float, int]:
    if benchmark not in model.base:
        raise ModelError(f"unknown benchmark {benchmark!r}")
    t, e, s = model.base[benchmark]
    s = float(s)
    for ft, fe, fs in model.factors[benchmark][:n_flags]:
        t *= ft
        e *= fe
        s *= fs
    return t, e, max(1, round(s))


def model_resources(model: CostModel, benchmark: str, config: OptConfig) -> tuple[float, float, int]:
    """Base resources times the per-position factors of every pass in the config, in order."""
    return _resources(model, benchmark, _prefix_positions(model, config.flags))


# -- model generation ---------------------------------------------------------

_PASS_POOL = (
    "simplifycfg sroa instcombine inline gvn licm loop-rotate loop-unroll "
    "loop-deletion indvars jump-threading reassociate dse adce sccp "
    "tailcallelim mem2reg memcpyopt globalopt ipsccp"
).split()
_ANALYSIS_POOL = "domtree loops scalar-evolution basicaa aa memdep lcssa-verification".split()


def random_pipeline(seed: int, transformations: int, analyses: Optional[int] = None,
                    label: str = "mockc") -> PassPipeline:
    rng = random.Random(seed)
    if analyses is None:
        analyses = rng.randint(0, transformations)
    kinds = [PassKind.TRANSFORMATION] * transformations + [PassKind.ANALYSIS] * analyses
    rng.shuffle(kinds)
    passes = [
        (rng.choice(_PASS_POOL if k is PassKind.TRANSFORMATION else _ANALYSIS_POOL), k)
        for k in kinds
    ]
    return PassPipeline.from_passes(passes, source_label=label, level="-O2")


def _base(rng: random.Random) -> tuple[float, float, int]:
    t = rng.uniform(1e-3, 5e-2)
    return t, t * rng.uniform(0.01, 0.05), rng.randint(2_000, 20_000)


def _with_energy_size(rng: random.Random, ft: float) -> Triple:
    # energy tracks time closely; size barely moves
    return ft, ft * math.exp(rng.gauss(0.0, 0.005)), math.exp(rng.gauss(0.0, 0.01))


def random_model(seed: int, pipeline: PassPipeline, benchmarks: Sequence[str],
                 time_mu: float = -0.03, time_sigma: float = 0.08,
                 invalid: Sequence[tuple[str, int]] = ()) -> CostModel:
    """Seeded model; transformation factors are log-normal around a slight speedup."""
    rng = random.Random(seed)
    base, factors = {}, {}
    for b in benchmarks:
        base[b] = _base(rng)
        factors[b] = [
            _with_energy_size(rng, math.exp(rng.gauss(time_mu, time_sigma)))
            if e.is_transformation else IDENTITY
            for e in pipeline.entries
        ]
    return CostModel(seed, pipeline, base, factors, set(invalid))


def targeted_model(seed: int, pipeline: PassPipeline, best_deltas: Mapping[str, float],
                   cuts: Optional[Mapping[str, int]] = None) -> CostModel:
    """Model whose best time delta per benchmark is known in advance.

    For a negative target ``d`` the optimum is placed at an interior config
    ``k`` (random unless given in ``cuts``): every transformation up to ``k``
    speeds the program up and every later one slows it down by the same
    factor, so that the full level is ``1/(1+d)`` times slower than config k.
    A zero target makes every transformation a speedup.
    """
    rng = random.Random(seed)
    n = pipeline.transformation_count
    base, factors = {}, {}
    for b, d in best_deltas.items():
        base[b] = _base(rng)
        if d < 0:
            if n < 2:
                raise ModelError("an interior optimum needs at least 2 transformations")
            k = (cuts or {}).get(b) or rng.randint(1, n - 1)
            if not 0 < k < n:
                raise ModelError(f"cut {k} is not interior")
            slow = (1.0 / (1.0 + d / 100.0)) ** (1.0 / (n - k))
        else:
            k, slow = n, 1.0
        fs, ti = [], 0
        for e in pipeline.entries:
            if not e.is_transformation:
                fs.append(IDENTITY)
                continue
            ti += 1
            ft = slow if ti > k else math.exp(-abs(rng.gauss(0.02, 0.02)) - 1e-4)
            fs.append(_with_energy_size(rng, ft))
        factors[b] = fs
    return CostModel(seed, pipeline, base, factors)


def suite_deltas(seed: int, n: int = 71, improved: int = 38, mean: float = -5.3,
                 lo: float = -1.0, hi: float = -90.0) -> list[float]:
    """Best-delta targets: ``improved`` values in [hi, lo], zeros elsewhere, averaging ``mean``."""
    rng = random.Random(seed)
    raw = [math.exp(rng.gauss(0.0, 1.0)) for _ in range(improved)]
    scale = (-mean * n + lo * improved) / sum(raw)
    deltas = [lo - scale * r for r in raw]
    if scale < 0 or min(deltas) < hi:
        raise ModelError("cannot hit the requested mean within the delta range")
    out = deltas + [0.0] * (n - improved)
    rng.shuffle(out)
    return out


# -- serialization ------------------------------------------------------------

def dump_model(model: CostModel) -> str:
    lines = [f"seed={model.seed}"]
    if model.pipeline.source_label:
        lines.append(f"source={model.pipeline.source_label}")
    if model.pipeline.level:
        lines.append(f"level={model.pipeline.level}")
    lines += [f"pass={e.position} {e.kind.value} {e.name}" for e in model.pipeline.entries]
    for b, (t, e, s) in model.base.items():
        lines.append(f"bench={b} {t!r} {e!r} {s}")
        for pos, (ft, fe, fs) in enumerate(model.factors[b]):
            if (ft, fe, fs) != IDENTITY:
                lines.append(f"factor={b} {pos} {ft!r} {fe!r} {fs!r}")
    lines += [f"invalid={b} {i}" for b, i in sorted(model.invalid)]
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> CostModel:
    seed, source, level = 0, "", ""
    passes: list[tuple[str, str]] = []
    base: dict = {}
    raw_factors: dict[str, dict[int, Triple]] = {}
    invalid: set = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        parts = value.split()
        try:
            if key == "seed":
                seed = int(value)
            elif key == "source":
                source = value
            elif key == "level":
                level = value
            elif key == "pass":
                if int(parts[0]) != len(passes):
                    raise ModelError(f"line {lineno}: pass positions out of order")
                passes.append((parts[2], parts[1]))
            elif key == "bench":
                base[parts[0]] = (float(parts[1]), float(parts[2]), int(parts[3]))
                raw_factors.setdefault(parts[0], {})
            elif key == "factor":
                raw_factors.setdefault(parts[0], {})[int(parts[1])] = tuple(map(float, parts[2:5]))
            elif key == "invalid":
                invalid.add((parts[0], int(parts[1])))
            else:
                raise ModelError(f"line {lineno}: unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise ModelError(f"line {lineno}: {exc}") from exc
    pipeline = PassPipeline.from_passes(passes, source_label=source, level=level)
    factors = {b: [fs.get(i, IDENTITY) for i in range(len(pipeline))] for b, fs in raw_factors.items()}
    return CostModel(seed, pipeline, base, factors, invalid)


def load_model(path) -> CostModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))


# -- the tools ----------------------------------------------------------------

_BENCH_RE = re.compile(r"benchmark=(\S+)")


def _read_tag(path: Path) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8")
    if not text.startswith("mockc-ir "):
        raise ModelError(f"{path}: not mock IR")
    return dict(tok.split("=", 1) for tok in text.split()[1:])


class UsageError(Exception):
    pass


_STEPS = {
    # step: (options taking a value, positional count; -1 = one or more)
    "frontend": ({"-o"}, -1),
    "opt": ({"-o"}, 1),
    "backend": ({"-o", "--level"}, 1),
    "link": ({"-o", "--level"}, 1),
    "run": (set(), 1),
    "size": (set(), 1),
    "measure": (set(), 2),
}


def _parse_tool_args(argv: list[str]) -> tuple[str, dict[str, str], list[str], list[str]]:
    """Split ``[--model M] STEP [options] positionals [passes]``.

    For ``opt`` everything after the input file is the pass list, so pass
    flags are never mistaken for options.
    """
    opts: dict[str, str] = {}
    i = 0
    if argv[:1] == ["--model"] or (argv and argv[0].startswith("--model=")):
        if argv[0] == "--model":
            opts["--model"], i = argv[1] if len(argv) > 1 else "", 2
        else:
            opts["--model"], i = argv[0].split("=", 1)[1], 1
    if i >= len(argv) or argv[i] not in _STEPS:
        raise UsageError(f"expected one of {', '.join(_STEPS)}")
    step = argv[i]
    known, npos = _STEPS[step]
    positionals: list[str] = []
    passes: list[str] = []
    rest = argv[i + 1:]
    j = 0
    while j < len(rest):
        tok = rest[j]
        name, eq, value = tok.partition("=")
        if name in known:
            if not eq:
                j += 1
                if j >= len(rest):
                    raise UsageError(f"{name} needs a value")
                value = rest[j]
            opts[name] = value
        else:
            positionals.append(tok)
            if step == "opt":
                passes = rest[j + 1:]
                break
        j += 1
    missing = [o for o in known if o not in opts]
    if missing:
        raise UsageError(f"{step}: missing {', '.join(sorted(missing))}")
    if (npos == -1 and not positionals) or (npos > 0 and len(positionals) != npos):
        raise UsageError(f"{step}: wrong number of arguments")
    return step, opts, positionals, passes


def run_tool(argv: Sequence[str], model: Optional[CostModel] = None,
             stdout=None, stderr=None, flag_prefix: str = "-") -> int:
    """Execute one mock tool invocation (``argv`` excludes the program name)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        step, opts, pos, passes = _parse_tool_args(list(argv))
    except UsageError as exc:
        stderr.write(f"mockc: {exc}\n")
        return 2
    output = Path(opts["-o"]) if "-o" in opts else None
    try:
        if opts.get("--model"):
            model = load_model(opts["--model"])
        if step == "frontend":
            text = "\n".join(Path(p).read_text(encoding="utf-8") for p in pos)
            m = _BENCH_RE.search(text)
            bench = m.group(1) if m else Path(pos[0]).stem
            output.write_text(f"mockc-ir benchmark={bench} flags=0\n")
        elif step == "opt":
            tag = _read_tag(Path(pos[0]))
            flags = [p[len(flag_prefix):] if p.startswith(flag_prefix) else p for p in passes]
            if model is None:
                raise ModelError("opt needs a model")
            n = _prefix_positions(model, flags)
            output.write_text(f"mockc-ir benchmark={tag['benchmark']} flags={n}\n")
        elif step == "backend":
            if model is None:
                raise ModelError("backend needs a model")
            tag = _read_tag(Path(pos[0]))
            bench, n = tag["benchmark"], int(tag["flags"])
            index = sum(1 for e in model.pipeline.entries[:n] if e.is_transformation)
            t, e, s = _resources(model, bench, n)
            binary = MockBinary(bench, index, t, e, s, valid=(bench, index) not in model.invalid)
            output.write_text(binary.encode())
        elif step == "link":
            text = Path(pos[0]).read_text()
            MockBinary.decode(text)
            output.write_text(text)
        elif step == "run":
            return 0 if MockBinary.decode(Path(pos[0]).read_text()).valid else 1
        elif step == "size":
            stdout.write(f"text={MockBinary.decode(Path(pos[0]).read_text()).size_b}\n")
        elif step == "measure":
            b = MockBinary.decode(Path(pos[0]).read_text())
            loops = int(pos[1])
            stdout.write(json.dumps({"time_s": b.time_s * loops,
                                     "energy_j": b.energy_j * loops}) + "\n")
    except (ModelError, OSError, KeyError, ValueError) as exc:
        stderr.write(f"mockc {step}: {exc}\n")
        return 1
    return 0


class MockRunner:
    """Runner that executes ``mockc`` argv in-process and anything else as a subprocess."""

    def __init__(self, model: CostModel, flag_prefix: str = "-"):
        self.model = model
        self.flag_prefix = flag_prefix
        self.fallback = SubprocessRunner()

    def __call__(self, argv, timeout=None, cwd=None) -> subprocess.CompletedProcess:
        argv = list(argv)
        if not argv or Path(argv[0]).name != "mockc":
            return self.fallback(argv, timeout=timeout, cwd=cwd)
        out, err = io.StringIO(), io.StringIO()
        code = run_tool(argv[1:], self.model, out, err, self.flag_prefix)
        return subprocess.CompletedProcess(argv, code, out.getvalue(), err.getvalue())


class SyntheticProvider:
    """Reads the model's figures straight out of a mock binary; zero variance."""

    def run(self, executable, bench: BenchmarkSpec, loop_count: int) -> RunSample:
        try:
            b = MockBinary.decode(Path(executable).read_text())
        except (ModelError, OSError, UnicodeDecodeError) as exc:
            raise MeasurementError(str(exc)) from exc
        return RunSample(b.time_s * loop_count, b.energy_j * loop_count)


def mock_templates(prog: str = "mockc") -> dict[str, str]:
    return {
        "frontend_cmd": f"{prog} frontend -o {{output}} {{input}}",
        "optimizer_cmd": f"{prog} opt -o {{output}} {{input}} {{passes}}",
        "backend_cmd": f"{prog} backend --level={{level}} -o {{output}} {{input}}",
        "link_cmd": f"{prog} link --level={{level}} -o {{output}} {{input}}",
        "size_cmd": f"{prog} size {{input}}",
    }


def mock_toolchain(model: CostModel, work_dir, level: str = "-O2"):
    """Return ``(ToolchainSpec, runner, provider)`` wired to the mock tools."""
    spec = ToolchainSpec(level=level, work_dir=Path(work_dir), label="mockc", **mock_templates())
    return spec, MockRunner(model), SyntheticProvider()


def write_mock_sources(model: CostModel, src_dir) -> list[BenchmarkSpec]:
    """Write one tiny source file per model benchmark and return matching specs."""
    src_dir = Path(src_dir)
    src_dir.mkdir(parents=True, exist_ok=True)
    specs = []
    for b in model.benchmarks:
        path = src_dir / f"{b}.c"
        path.write_text(f"/* mockc benchmark={b} */\nint main(void) {{ return 0; }}\n")
        specs.append(BenchmarkSpec(name=b, sources=[path], run_cmd="mockc run {input}"))
    return specs


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_tool(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
