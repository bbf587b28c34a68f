"""Exploration config files.

INI syntax, no interpolation. Relative paths are resolved against the
directory holding the config file::

    [exploration]
    pipeline = pipelines/llvm5.0-O2.txt
    out_dir = results
    jobs = 4
    epsilon_pct = 0
    criteria = time,energy,size

    [toolchain]
    label = llvm-5.0
    level = -O2
    frontend = clang -O0 -Xclang -disable-O0-optnone -emit-llvm -c {input} -o {output}
    optimizer = opt {passes} {input} -o {output}
    backend = llc {level} -filetype=obj {input} -o {output}
    link = clang {level} {input} -o {output}

    [measurement]
    provider = timer
    repeats = 5

    [benchmark levenstein]
    sources = c/levenstein.c
    run = {input}

``[toolchain] runner = mock`` with ``mock_model = <file>`` routes every
``mockc`` command to the in-process mock tools; the templates, size command
and provider then default to their mock versions.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .measurement import MeasurementPlan
from .selection import CRITERIA, parse_criteria
from .toolchain import DEFAULT_TIMEOUT_S, BenchmarkSpec, ToolchainSpec

__all__ = ["ConfigError", "ExplorationConfig", "load_config", "ENV_OUT_DIR", "ENV_JOBS"]

ENV_OUT_DIR = "PASSPREFIX_OUT_DIR"
ENV_JOBS = "PASSPREFIX_JOBS"

PROVIDERS = ("timer", "command", "synthetic")
RUNNERS = ("subprocess", "mock")


class ConfigError(ValueError):
    pass


@dataclass
class ExplorationConfig:
    pipeline_file: Path
    toolchain: ToolchainSpec
    benchmarks: list[BenchmarkSpec]
    plan: MeasurementPlan = field(default_factory=MeasurementPlan)
    epsilon_pct: float = 0.0
    jobs: int = 1
    out_dir: Path = Path("results")
    criteria: tuple[str, ...] = CRITERIA
    provider: str = "timer"
    provider_cmd: Optional[str] = None
    runner: str = "subprocess"
    mock_model: Optional[Path] = None
    timestamp: Optional[str] = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.epsilon_pct < 0:
            raise ConfigError("epsilon_pct must be >= 0")
        if not self.benchmarks:
            raise ConfigError("no benchmarks configured")
        names = [b.name for b in self.benchmarks]
        if len(set(names)) != len(names):
            raise ConfigError("benchmark names must be unique")
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}")
        if self.provider == "command" and not self.provider_cmd:
            raise ConfigError("provider = command needs a command template")
        if self.runner not in RUNNERS:
            raise ConfigError(f"runner must be one of {RUNNERS}")
        if self.runner == "mock" and self.mock_model is None:
            raise ConfigError("runner = mock needs mock_model")
        for p in [self.pipeline_file, self.mock_model, *(s for b in self.benchmarks for s in b.sources)]:
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")


def _resolve(base: Path, value: str) -> Path:
    p = Path(os.path.expanduser(value))
    return p if p.is_absolute() else Path(os.path.normpath(base / p))


def load_config(path, out_dir=None, jobs=None) -> ExplorationConfig:
    """Load a config file; ``out_dir``/``jobs`` arguments beat the environment, which beats the file."""
    from .mockc import mock_templates

    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            cp.read_file(f)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.resolve().parent

    try:
        ex = cp["exploration"]
        tc = cp["toolchain"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing section {exc}") from None
    ms = cp["measurement"] if cp.has_section("measurement") else {}

    try:
        runner = tc.get("runner", "subprocess")
        mock = runner == "mock"
        defaults = mock_templates() if mock else {}
        out = out_dir or os.environ.get(ENV_OUT_DIR) or ex.get("out_dir", "results")
        out = _resolve(Path.cwd() if out_dir or os.environ.get(ENV_OUT_DIR) else base, str(out))
        n_jobs = int(jobs or os.environ.get(ENV_JOBS) or ex.get("jobs", "1"))
        work = tc.get("work_dir")
        size_cmd = tc.get("size", defaults.get("size_cmd"))
        timeout = float(ms.get("timeout_s", DEFAULT_TIMEOUT_S))

        def template(key):
            value = tc.get(key, defaults.get(f"{key}_cmd"))
            if value is None:
                raise ConfigError(f"{path}: [toolchain] {key} is required")
            return value

        spec = ToolchainSpec(
            frontend_cmd=template("frontend"),
            optimizer_cmd=template("optimizer"),
            backend_cmd=template("backend"),
            link_cmd=template("link"),
            level=tc.get("level", "-O2"),
            work_dir=_resolve(base, work) if work else out / "work",
            flag_prefix=tc.get("flag_prefix", "-"),
            pass_separator=tc.get("pass_separator", ","),
            extra=tc.get("extra", ""),
            size_cmd=size_cmd or None,
            label=tc.get("label", "mockc" if mock else ""),
            timeout_s=timeout,
        )

        benches = []
        for section in cp.sections():
            kind, _, name = section.partition(" ")
            if kind != "benchmark":
                continue
            b = cp[section]
            benches.append(BenchmarkSpec(
                name=name.strip(),
                sources=[_resolve(base, s) for s in b.get("sources", "").split()],
                run_cmd=b.get("run", "mockc run {input}" if mock else "{input}"),
                validate_cmd=b.get("validate") or None,
                expected_exit=int(b.get("expected_exit", "0")),
            ))

        plan = MeasurementPlan(
            repeats=int(ms.get("repeats", "5")),
            min_run_s=float(ms.get("min_run_s", "0.5")),
            warmups=int(ms.get("warmups", "1")),
        )
        model = tc.get("mock_model")
        return ExplorationConfig(
            pipeline_file=_resolve(base, ex["pipeline"]),
            toolchain=spec,
            benchmarks=benches,
            plan=plan,
            epsilon_pct=float(ex.get("epsilon_pct", "0")),
            jobs=n_jobs,
            out_dir=out,
            criteria=parse_criteria(ex.get("criteria", ",".join(CRITERIA))),
            provider=ms.get("provider", "synthetic" if mock else "timer"),
            provider_cmd=ms.get("command"),
            runner=runner,
            mock_model=_resolve(base, model) if model else None,
            timestamp=ex.get("timestamp"),
        )
    except ConfigError:
        raise
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
