"""Execution time, energy and code size measurement.

Providers report *totals* for one measured run of ``loop_count`` iterations;
``measure`` turns the median run into per-iteration figures. All measured
runs in the process are serialized through ``MEASURE_LOCK``.
"""

from __future__ import annotations

import json
import logging
import statistics
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol

from .toolchain import BenchmarkSpec, SubprocessRunner, render_command

logger = logging.getLogger(__name__)

__all__ = [
    "MEASURE_LOCK",
    "MAX_LOOP_COUNT",
    "MeasurementError",
    "ResourceMeasurement",
    "MeasurementPlan",
    "RunSample",
    "Provider",
    "TimerProvider",
    "CommandProvider",
    "calibrate",
    "measure",
    "code_size",
    "parse_size_output",
]

MEASURE_LOCK = threading.Lock()
MAX_LOOP_COUNT = 2**20


class MeasurementError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResourceMeasurement:
    exec_time_s: float
    code_size_b: int
    energy_j: Optional[float] = None
    avg_power_w: Optional[float] = None
    repeats: int = 1
    loop_count: int = 1

    def to_dict(self) -> dict:
        return {
            "exec_time_s": self.exec_time_s,
            "energy_j": self.energy_j,
            "avg_power_w": self.avg_power_w,
            "code_size_b": self.code_size_b,
            "repeats": self.repeats,
            "loop_count": self.loop_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResourceMeasurement":
        return cls(
            exec_time_s=d["exec_time_s"],
            code_size_b=d["code_size_b"],
            energy_j=d.get("energy_j"),
            avg_power_w=d.get("avg_power_w"),
            repeats=d.get("repeats", 1),
            loop_count=d.get("loop_count", 1),
        )


@dataclass
class MeasurementPlan:
    repeats: int = 5
    min_run_s: float = 0.5
    warmups: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.min_run_s <= 0:
            raise ValueError("min_run_s must be > 0")
        if self.warmups < 0:
            raise ValueError("warmups must be >= 0")


@dataclass(frozen=True)
class RunSample:
    time_s: float
    energy_j: Optional[float] = None
    power_w: Optional[float] = None


class Provider(Protocol):
    def run(self, executable: Path, bench: BenchmarkSpec, loop_count: int) -> RunSample: ...


class TimerProvider:
    """Wall-clock timing of the benchmark's run command.

    If ``run_cmd`` has a ``{loops}`` placeholder the binary is launched once
    and told how many iterations to do, otherwise it is launched
    ``loop_count`` times back to back. ``launcher`` replaces the process
    launch entirely (used for in-process stubs).
    """

    def __init__(self, launcher: Optional[Callable[[Path, BenchmarkSpec, int], None]] = None,
                 runner=None, timeout_s: float = 60.0):
        self.launcher = launcher or self._launch
        self.runner = runner or SubprocessRunner()
        self.timeout_s = timeout_s

    def _launch(self, executable, bench, loop_count):
        argv = render_command(bench.run_cmd, input=str(executable), loops=loop_count)
        launches = 1 if "{loops}" in bench.run_cmd else loop_count
        for _ in range(launches):
            try:
                proc = self.runner(argv, timeout=self.timeout_s)
            except subprocess.TimeoutExpired:
                raise MeasurementError(f"{bench.name}: run timed out")
            if proc.returncode != bench.expected_exit:
                raise MeasurementError(f"{bench.name}: run exited with {proc.returncode}")

    def run(self, executable, bench, loop_count):
        t0 = time.perf_counter()
        self.launcher(executable, bench, loop_count)
        return RunSample(time.perf_counter() - t0)


class CommandProvider:
    """Runs an external measuring command and reads one JSON object from its stdout.

    The object carries ``time_s`` (required), ``energy_j`` and ``power_w``
    (optional), all totals for the run.
    """

    def __init__(self, cmd_template: str, runner=None, timeout_s: float = 600.0):
        self.cmd_template = cmd_template
        self.runner = runner or SubprocessRunner()
        self.timeout_s = timeout_s

    def run(self, executable, bench, loop_count):
        argv = render_command(self.cmd_template, input=str(executable), loops=loop_count)
        try:
            proc = self.runner(argv, timeout=self.timeout_s)
        except subprocess.TimeoutExpired:
            raise MeasurementError(f"{bench.name}: measurement command timed out")
        if proc.returncode != 0:
            raise MeasurementError(f"{bench.name}: measurement command exited with {proc.returncode}")
        return parse_provider_output(proc.stdout)


def parse_provider_output(text: str) -> RunSample:
    try:
        obj = json.loads(text.strip())
        t = float(obj["time_s"])
    except (ValueError, KeyError, TypeError) as exc:
        raise MeasurementError(f"bad provider output {text!r}: {exc}") from None
    energy = obj.get("energy_j")
    power = obj.get("power_w")
    return RunSample(
        t,
        None if energy is None else float(energy),
        None if power is None else float(power),
    )


def calibrate(executable, bench: BenchmarkSpec, provider: Provider, plan: MeasurementPlan) -> int:
    """Smallest power-of-two loop count whose measured run lasts at least ``plan.min_run_s``."""
    loops = 1
    with MEASURE_LOCK:
        while True:
            try:
                sample = provider.run(Path(executable), bench, loops)
            except MeasurementError:
                raise
            except Exception as exc:
                raise MeasurementError(f"{bench.name}: calibration run failed: {exc}") from exc
            if sample.time_s >= plan.min_run_s:
                return loops
            if loops >= MAX_LOOP_COUNT:
                logger.warning(
                    "%s: calibration capped at %d loops (run took %.3g s)",
                    bench.name, MAX_LOOP_COUNT, sample.time_s,
                )
                return MAX_LOOP_COUNT
            loops *= 2


def measure(executable, bench: BenchmarkSpec, provider: Provider, plan: MeasurementPlan,
            loop_count: int, size: Optional[int] = None, size_cmd: Optional[str] = None,
            runner=None) -> ResourceMeasurement:
    """Warm up, then take ``plan.repeats`` runs and report median per-iteration figures."""
    executable = Path(executable)
    samples = []
    with MEASURE_LOCK:
        try:
            for _ in range(plan.warmups):
                provider.run(executable, bench, loop_count)
            for _ in range(plan.repeats):
                samples.append(provider.run(executable, bench, loop_count))
        except MeasurementError:
            raise
        except Exception as exc:
            raise MeasurementError(f"{bench.name}: provider failed: {exc}") from exc

    exec_time = statistics.median(s.time_s for s in samples) / loop_count
    if exec_time <= 0:
        raise MeasurementError(f"{bench.name}: non-positive execution time")
    energy = power = None
    if all(s.energy_j is not None for s in samples):
        energy = statistics.median(s.energy_j for s in samples) / loop_count
        power = energy / exec_time
    elif all(s.power_w is not None for s in samples):
        power = statistics.median(s.power_w for s in samples)
        energy = power * exec_time
    if size is None:
        size = code_size(executable, size_cmd, runner)
    return ResourceMeasurement(
        exec_time_s=exec_time,
        code_size_b=size,
        energy_j=energy,
        avg_power_w=power,
        repeats=plan.repeats,
        loop_count=loop_count,
    )


def _parse_berkeley(lines: list[str]) -> int:
    # "text data bss dec hex filename" header, one row per file
    total = 0
    for row in lines[1:]:
        cols = row.split()
        try:
            total += sum(int(c) for c in cols[:3])
        except ValueError:
            raise MeasurementError(f"bad size row {row!r}") from None
    return total


def parse_size_output(text: str) -> int:
    """Sum ``key=value`` integer fields, e.g. ``text=100 data=20 bss=8`` -> 128.

    Plain ``size`` (Berkeley format) output is also accepted; its text, data
    and bss columns are summed.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) > 1 and lines[0].split()[:3] == ["text", "data", "bss"]:
        return _parse_berkeley(lines)
    total = 0
    found = False
    for token in text.split():
        _, sep, value = token.partition("=")
        if not sep:
            continue
        try:
            total += int(value)
        except ValueError:
            raise MeasurementError(f"bad size field {token!r}") from None
        found = True
    if not found:
        raise MeasurementError(f"no size fields in {text!r}")
    return total


def code_size(executable, size_cmd: Optional[str] = None, runner=None) -> int:
    executable = Path(executable)
    if size_cmd:
        runner = runner or SubprocessRunner()
        proc = runner(render_command(size_cmd, input=str(executable)), timeout=60)
        if proc.returncode != 0:
            raise MeasurementError(f"size command exited with {proc.returncode}")
        return parse_size_output(proc.stdout)
    try:
        return executable.stat().st_size
    except OSError as exc:
        raise MeasurementError(f"cannot size {executable}: {exc}") from exc
