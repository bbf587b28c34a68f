"""Black-box compiler toolchain driver.

Every tool is described by a command template. Templates are split into an
argument vector with shell quoting rules (no shell is involved) and then
placeholders are substituted per token:

``{input}``   input path(s); a bare token expands to one argument per path
``{output}``  output path
``{passes}``  the config's flags, each prefixed with ``flag_prefix``; a bare
              token expands to one argument per flag, an embedded one is
              joined with ``pass_separator``
``{passes+}`` same as ``{passes}`` but the step is skipped (input copied to
              output) when the flag list is empty
``{level}``   the exploration level, used for backend and linker
``{extra}``   ``ToolchainSpec.extra`` split into arguments
``{loops}``   loop count (run and measurement commands only)
"""

from __future__ import annotations

import enum
import functools
import hashlib
import logging
import os
import re
import shlex
import shutil
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .pipeline import OptConfig

logger = logging.getLogger(__name__)

__all__ = [
    "BuildStatus",
    "ToolchainSpec",
    "BenchmarkSpec",
    "BuildArtifact",
    "CompileError",
    "Runner",
    "SubprocessRunner",
    "ToolchainDriver",
    "render_command",
    "expand_passes",
]

DEFAULT_TIMEOUT_S = 60.0

_PLACEHOLDER = re.compile(r"\{(input|output|passes\+?|level|extra|loops)\}")


class BuildStatus(str, enum.Enum):
    BUILT = "Built"
    COMPILE_FAILED = "CompileFailed"
    VALIDATION_FAILED = "ValidationFailed"
    UNMEASURED = "Unmeasured"


class CompileError(RuntimeError):
    def __init__(self, message: str, log: str = ""):
        super().__init__(message)
        self.log = log


def _require(template: str, what: str, *names: str) -> None:
    for name in names:
        if name == "passes":
            ok = "{passes}" in template or "{passes+}" in template
        else:
            ok = "{" + name + "}" in template
        if not ok:
            raise ValueError(f"{what} template must contain {{{name}}}: {template!r}")


@dataclass
class ToolchainSpec:
    frontend_cmd: str
    optimizer_cmd: str
    backend_cmd: str
    link_cmd: str
    level: str = "-O2"
    work_dir: Path = Path("work")
    flag_prefix: str = "-"
    pass_separator: str = ","
    extra: str = ""
    size_cmd: Optional[str] = None
    label: str = ""
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        self.work_dir = Path(self.work_dir)
        _require(self.frontend_cmd, "frontend", "input", "output")
        _require(self.optimizer_cmd, "optimizer", "input", "output", "passes")
        _require(self.backend_cmd, "backend", "input", "output", "level")
        _require(self.link_cmd, "link", "input", "output", "level")
        if self.size_cmd is not None:
            _require(self.size_cmd, "size", "input")


@dataclass
class BenchmarkSpec:
    name: str
    sources: list[Path]
    run_cmd: str = "{input}"
    validate_cmd: Optional[str] = None
    expected_exit: int = 0

    def __post_init__(self):
        self.sources = [Path(s) for s in self.sources]
        if not self.name or "/" in self.name or self.name.startswith("."):
            raise ValueError(f"invalid benchmark name {self.name!r}")
        if not self.sources:
            raise ValueError(f"benchmark {self.name!r} has no sources")
        _require(self.run_cmd, "run", "input")
        if self.validate_cmd is not None:
            _require(self.validate_cmd, "validate", "input")


@dataclass
class BuildArtifact:
    benchmark: str
    config_index: int
    status: BuildStatus
    executable_path: Optional[Path] = None
    ir_path: Optional[Path] = None
    build_log: str = ""
    reason: str = ""

    def __post_init__(self):
        has_exe = self.executable_path is not None
        needs_exe = self.status in (BuildStatus.BUILT, BuildStatus.VALIDATION_FAILED)
        if has_exe != needs_exe:
            raise ValueError(f"executable_path inconsistent with status {self.status}")


def expand_passes(flags: Sequence[str], prefix: str = "-") -> list[str]:
    return [prefix + f for f in flags]


@functools.lru_cache(maxsize=256)
def _split(template: str) -> tuple[str, ...]:
    return tuple(shlex.split(template))


def render_command(template: str, **values) -> list[str]:
    """Split ``template`` into argv and substitute placeholders.

    List-valued placeholders (``input``, ``passes``, ``extra``) expand into
    several arguments when they make up a whole token.
    """
    argv: list[str] = []
    sep = values.pop("_separator", ",")
    for token in _split(template):
        whole = _PLACEHOLDER.fullmatch(token)
        if whole:
            key = whole.group(1).rstrip("+")
            value = values.get(key, "")
            if isinstance(value, (list, tuple)):
                argv.extend(str(v) for v in value)
            elif key == "extra":
                argv.extend(shlex.split(str(value)))
            else:
                argv.append(str(value))
            continue

        def sub(m: re.Match) -> str:
            value = values.get(m.group(1).rstrip("+"), "")
            if isinstance(value, (list, tuple)):
                return sep.join(str(v) for v in value)
            return str(value)

        argv.append(_PLACEHOLDER.sub(sub, token))
    return argv


Runner = Callable[..., subprocess.CompletedProcess]


class SubprocessRunner:
    """Launches argv without a shell, capturing output as text."""

    def __call__(self, argv, timeout=None, cwd=None) -> subprocess.CompletedProcess:
        return subprocess.run(
            list(argv),
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            timeout=timeout,
            cwd=cwd,
        )


def sources_digest(paths: Sequence[Path]) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(str(Path(p).name).encode())
        h.update(b"\0")
        h.update(Path(p).read_bytes())
        h.update(b"\0")
    return h.hexdigest()[:16]


_SAFE_ARG = re.compile(r"[\w@%+=:,./-]+", re.ASCII)


def _join(argv) -> str:
    # shlex.join, minus the per-argument regex search for the common safe case
    return " ".join(a if _SAFE_ARG.fullmatch(a) else shlex.quote(a) for a in argv)


def _format_log(argv, proc) -> str:
    out = [f"$ {_join(argv)}", f"[exit {proc.returncode}]"]
    if proc.stdout:
        out.append(proc.stdout.rstrip("\n"))
    if proc.stderr:
        out.append(proc.stderr.rstrip("\n"))
    return "\n".join(out) + "\n"


class ToolchainDriver:
    """Runs frontend, optimizer, backend and linker for one toolchain.

    Scratch layout: ``work_dir/<benchmark>/ir/<digest>.ll`` for the cached
    unoptimized IR, ``work_dir/<benchmark>/<config_index>/`` for everything
    produced from one config.
    """

    def __init__(self, spec: ToolchainSpec, runner: Optional[Runner] = None):
        self.spec = spec
        self.runner = runner or SubprocessRunner()
        self.invocations: list[list[str]] = []
        self._ir_lock = threading.Lock()
        self._count_lock = threading.Lock()

    def config_dir(self, bench_name: str, config_index: int) -> Path:
        return self.spec.work_dir / bench_name / str(config_index)

    def _run(self, argv: list[str], log: list[str], timeout=None):
        with self._count_lock:
            self.invocations.append(argv)
        logger.debug("run %s", argv)
        try:
            proc = self.runner(argv, timeout=timeout or self.spec.timeout_s)
        except FileNotFoundError as exc:
            proc = subprocess.CompletedProcess(argv, 127, "", str(exc))
        log.append(_format_log(argv, proc))
        return proc

    def _step(self, template: str, what: str, log: list[str], **values) -> None:
        argv = render_command(
            template, extra=self.spec.extra, _separator=self.spec.pass_separator, **values
        )
        try:
            proc = self._run(argv, log)
        except subprocess.TimeoutExpired:
            log.append(f"[{what} timed out]\n")
            raise CompileError(f"{what} timed out", "".join(log))
        if proc.returncode != 0:
            raise CompileError(f"{what} exited with {proc.returncode}", "".join(log))

    def emit_unoptimized_ir(self, bench: BenchmarkSpec) -> Path:
        """Run the frontend once per benchmark, reusing the cached IR when sources are unchanged."""
        missing = [str(s) for s in bench.sources if not Path(s).is_file()]
        if missing:
            raise FileNotFoundError(f"missing sources for {bench.name}: {missing}")
        digest = sources_digest(bench.sources)
        out = self.spec.work_dir / bench.name / "ir" / f"{digest}.ll"
        with self._ir_lock:
            if out.is_file():
                return out
            out.parent.mkdir(parents=True, exist_ok=True)
            tmp = out.with_suffix(".tmp")
            log: list[str] = []
            try:
                self._step(
                    self.spec.frontend_cmd,
                    "frontend",
                    log,
                    input=[str(s) for s in bench.sources],
                    output=str(tmp),
                )
            finally:
                (out.parent / "frontend.log").write_text("".join(log))
            if not tmp.is_file():
                raise CompileError("frontend produced no output", "".join(log))
            os.replace(tmp, out)
        return out

    def optimize(self, ir_path, config: OptConfig, bench_name: str, log=None) -> Path:
        ir_path = Path(ir_path)
        if not ir_path.is_file():
            raise FileNotFoundError(ir_path)
        log = [] if log is None else log
        d = self.config_dir(bench_name, config.index)
        d.mkdir(parents=True, exist_ok=True)
        out = d / "opt.ll"
        passes = expand_passes(config.flags, self.spec.flag_prefix)
        if not passes and "{passes+}" in self.spec.optimizer_cmd:
            shutil.copyfile(ir_path, out)
            log.append("[optimizer skipped: empty pass list]\n")
            return out
        self._step(
            self.spec.optimizer_cmd, "optimizer", log,
            input=str(ir_path), output=str(out), passes=passes,
        )
        return out

    def build_executable(self, opt_ir_path, bench_name: str, config_index: int, log=None) -> Path:
        """Backend then linker, both at the exploration level whatever the config."""
        opt_ir_path = Path(opt_ir_path)
        if not opt_ir_path.is_file():
            raise FileNotFoundError(opt_ir_path)
        log = [] if log is None else log
        d = self.config_dir(bench_name, config_index)
        obj = d / "prog.o"
        exe = d / "prog"
        level = self.spec.level
        self._step(self.spec.backend_cmd, "backend", log, input=str(opt_ir_path), output=str(obj), level=level)
        self._step(self.spec.link_cmd, "link", log, input=str(obj), output=str(exe), level=level)
        return exe

    def validate(self, executable, bench: BenchmarkSpec, log=None) -> tuple[BuildStatus, str]:
        log = [] if log is None else log
        if bench.validate_cmd:
            argv = render_command(bench.validate_cmd, input=str(executable), loops=1)
            expected = 0
        else:
            argv = render_command(bench.run_cmd, input=str(executable), loops=1)
            expected = bench.expected_exit
        try:
            proc = self._run(argv, log)
        except subprocess.TimeoutExpired:
            log.append("[validation timed out]\n")
            return BuildStatus.VALIDATION_FAILED, "timeout"
        if proc.returncode != expected:
            return BuildStatus.VALIDATION_FAILED, f"exit {proc.returncode}, expected {expected}"
        return BuildStatus.BUILT, ""

    def build(self, bench: BenchmarkSpec, ir_path, config: OptConfig) -> BuildArtifact:
        """Optimize, build and validate one config; failures are recorded, never raised."""
        log: list[str] = []
        exe = None
        try:
            opt = self.optimize(ir_path, config, bench.name, log)
            exe = self.build_executable(opt, bench.name, config.index, log)
            status, reason = self.validate(exe, bench, log)
        except (CompileError, FileNotFoundError) as exc:
            status, reason, exe = BuildStatus.COMPILE_FAILED, str(exc), None
        d = self.config_dir(bench.name, config.index)
        d.mkdir(parents=True, exist_ok=True)
        (d / "build.log").write_text("".join(log))
        return BuildArtifact(
            benchmark=bench.name,
            config_index=config.index,
            status=status,
            executable_path=exe,
            ir_path=Path(ir_path),
            build_log="".join(log),
            reason=reason,
        )
