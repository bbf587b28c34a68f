"""The compile / measure / select loop over every prefix configuration."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .config import ExplorationConfig
from .measurement import (
    CommandProvider,
    MeasurementError,
    ResourceMeasurement,
    TimerProvider,
    calibrate,
    measure,
)
from .pipeline import OptConfig, PassPipeline, generate_configs, load_pipeline
from .reporting import ReportBundle, write_bundle
from .selection import AnalysisError, CompilationProfile, ConfigResult, build_profile
from .toolchain import (
    BenchmarkSpec,
    BuildArtifact,
    BuildStatus,
    CompileError,
    ToolchainDriver,
    sources_digest,
)

logger = logging.getLogger(__name__)

__all__ = ["ExplorationResult", "explore", "make_runtime"]

STATE_FILE = "result.json"
CALIBRATION_FILE = "calibration.json"


@dataclass
class ExplorationResult:
    bundle: ReportBundle
    exit_code: int
    invocations: int = 0
    measured: int = 0
    reused: int = 0
    errors: list[str] = field(default_factory=list)


def make_runtime(cfg: ExplorationConfig):
    """Build the driver and measurement provider a config asks for."""
    if cfg.runner == "mock":
        from .mockc import MockRunner, load_model

        runner = MockRunner(load_model(cfg.mock_model), cfg.toolchain.flag_prefix)
    else:
        runner = None
    driver = ToolchainDriver(cfg.toolchain, runner)
    if cfg.provider == "synthetic":
        from .mockc import SyntheticProvider

        provider = SyntheticProvider()
    elif cfg.provider == "command":
        provider = CommandProvider(cfg.provider_cmd, runner=driver.runner)
    else:
        provider = TimerProvider(runner=driver.runner, timeout_s=cfg.toolchain.timeout_s)
    return driver, provider


def _fingerprint(cfg: ExplorationConfig, bench: BenchmarkSpec) -> str:
    tc = cfg.toolchain
    parts = [
        tc.frontend_cmd, tc.optimizer_cmd, tc.backend_cmd, tc.link_cmd, tc.level,
        tc.flag_prefix, tc.pass_separator, tc.extra, tc.size_cmd or "",
        bench.run_cmd, bench.validate_cmd or "", str(bench.expected_exit),
        sources_digest(bench.sources), cfg.provider, cfg.provider_cmd or "",
        repr((cfg.plan.repeats, cfg.plan.min_run_s, cfg.plan.warmups)),
    ]
    return hashlib.sha256("\0".join(parts).encode()).hexdigest()[:16]


def _flags_digest(config: OptConfig) -> str:
    return hashlib.sha256("\0".join(config.flags).encode()).hexdigest()[:16]


def _load_json(path: Path) -> Optional[dict]:
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError):
        return None


def _save_json(path: Path, doc: dict) -> None:
    # no tmp+rename: a torn file fails to load and only costs a rebuild
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc) + "\n")


def _result_from_state(state: dict, config: OptConfig) -> ConfigResult:
    m = state.get("measurement")
    return ConfigResult(
        config_index=config.index,
        label=config.label,
        status=BuildStatus(state["status"]),
        measurement=ResourceMeasurement.from_dict(m) if m else None,
        flags=config.flags,
        reason=state.get("reason", ""),
    )


def _timestamp(cfg: ExplorationConfig) -> str:
    if cfg.timestamp:
        return cfg.timestamp
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


class _BenchmarkRun:
    def __init__(self, cfg, driver, provider, configs, bench, stats):
        self.cfg = cfg
        self.driver = driver
        self.provider = provider
        self.configs = configs
        self.bench = bench
        self.stats = stats
        self.root = cfg.toolchain.work_dir / bench.name
        self.fingerprint = _fingerprint(cfg, bench)

    def state_path(self, config: OptConfig) -> Path:
        return self.root / str(config.index) / STATE_FILE

    def resumed(self, config: OptConfig) -> Optional[dict]:
        state = _load_json(self.state_path(config))
        if not state or state.get("fingerprint") != self.fingerprint:
            return None
        if state.get("flags_digest") != _flags_digest(config):
            return None
        if state.get("status") == BuildStatus.UNMEASURED.value:
            return None
        return state

    def persist(self, config: OptConfig, status: BuildStatus, reason="", measurement=None):
        _save_json(self.state_path(config), {
            "config_index": config.index,
            "flags_digest": _flags_digest(config),
            "fingerprint": self.fingerprint,
            "status": status.value,
            "reason": reason,
            "measurement": measurement.to_dict() if measurement else None,
        })

    def loop_count(self, baseline: BuildArtifact | None) -> int:
        cal_path = self.root / CALIBRATION_FILE
        cal = _load_json(cal_path)
        if cal and cal.get("fingerprint") == self.fingerprint:
            return cal["loop_count"]
        exe = baseline.executable_path if baseline else self.root / str(self.configs[-1].index) / "prog"
        loops = calibrate(exe, self.bench, self.provider, self.cfg.plan)
        _save_json(cal_path, {"fingerprint": self.fingerprint, "loop_count": loops})
        logger.info("%s: calibrated to %d loops", self.bench.name, loops)
        return loops

    def run(self) -> list[ConfigResult]:
        # full level first, truncating down to -O0
        order = sorted(self.configs, key=lambda c: -c.index)
        results: dict[int, ConfigResult] = {}
        pending = []
        for config in order:
            state = self.resumed(config)
            if state is None:
                pending.append(config)
            else:
                results[config.index] = _result_from_state(state, config)
                self.stats.reused += 1
        if not pending:
            return [results[c.index] for c in self.configs]

        try:
            ir = self.driver.emit_unoptimized_ir(self.bench)
        except (CompileError, FileNotFoundError) as exc:
            logger.error("%s: frontend failed: %s", self.bench.name, exc)
            for c in pending:
                results[c.index] = ConfigResult(c.index, c.label, BuildStatus.COMPILE_FAILED,
                                                flags=c.flags, reason=f"frontend: {exc}")
            return [results[c.index] for c in self.configs]

        def build(c):
            return self.driver.build(self.bench, ir, c)

        if self.cfg.jobs == 1:
            artifacts = [build(c) for c in pending]
        else:
            with ThreadPoolExecutor(max_workers=self.cfg.jobs) as pool:
                artifacts = list(pool.map(build, pending))

        by_index = {a.config_index: a for a in artifacts}
        baseline_index = self.configs[-1].index
        loops = None
        baseline_ok = (
            results[baseline_index].status is BuildStatus.BUILT if baseline_index in results
            else by_index[baseline_index].status is BuildStatus.BUILT
        )
        calib_error = "baseline not built"
        if baseline_ok:
            try:
                loops = self.loop_count(by_index.get(baseline_index))
            except MeasurementError as exc:
                calib_error = f"calibration: {exc}"
                logger.error("%s: %s", self.bench.name, calib_error)

        for config, art in zip(pending, artifacts):
            if art.status is not BuildStatus.BUILT:
                self.persist(config, art.status, art.reason)
                results[config.index] = ConfigResult(config.index, config.label, art.status,
                                                     flags=config.flags, reason=art.reason)
                continue
            if loops is None:
                results[config.index] = ConfigResult(config.index, config.label,
                                                     BuildStatus.UNMEASURED, flags=config.flags,
                                                     reason=calib_error)
                continue
            try:
                m = measure(art.executable_path, self.bench, self.provider, self.cfg.plan, loops,
                            size_cmd=self.cfg.toolchain.size_cmd, runner=self.driver.runner)
            except MeasurementError as exc:
                logger.warning("%s config %d unmeasured: %s", self.bench.name, config.index, exc)
                results[config.index] = ConfigResult(config.index, config.label,
                                                     BuildStatus.UNMEASURED, flags=config.flags,
                                                     reason=str(exc))
                continue
            self.persist(config, BuildStatus.BUILT, measurement=m)
            self.stats.measured += 1
            results[config.index] = ConfigResult(config.index, config.label, BuildStatus.BUILT,
                                                 measurement=m, flags=config.flags)
        return [results[c.index] for c in self.configs]


def explore(cfg: ExplorationConfig, driver=None, provider=None) -> ExplorationResult:
    """Explore every prefix config of every benchmark and write the report bundle."""
    pipeline: PassPipeline = load_pipeline(cfg.pipeline_file)
    configs = generate_configs(pipeline)
    if driver is None or provider is None:
        d, p = make_runtime(cfg)
        driver = driver or d
        provider = provider or p
    result = ExplorationResult(bundle=None, exit_code=0)
    profiles: list[CompilationProfile] = []
    skipped: list[tuple[str, str]] = []
    baseline_index = configs[-1].index

    for bench in cfg.benchmarks:
        logger.info("%s: exploring %d configs", bench.name, len(configs))
        results = _BenchmarkRun(cfg, driver, provider, configs, bench, result).run()
        try:
            profiles.append(build_profile(bench.name, results, baseline_index,
                                          cfg.epsilon_pct, cfg.criteria))
        except AnalysisError as exc:
            logger.error("skipping %s", exc)
            skipped.append((bench.name, str(exc)))
            result.errors.append(str(exc))

    metadata = {
        "timestamp": _timestamp(cfg),
        "tool_version": __version__,
        "toolchain": cfg.toolchain.label,
        "level": cfg.toolchain.level,
        "pipeline": pipeline.source_label,
        "transformation_count": pipeline.transformation_count,
        "configs_per_benchmark": {"total": len(configs), "nonempty": len(configs) - 1},
        "epsilon_pct": cfg.epsilon_pct,
        "criteria": list(cfg.criteria),
        "plan": {"repeats": cfg.plan.repeats, "min_run_s": cfg.plan.min_run_s,
                 "warmups": cfg.plan.warmups},
        "provider": cfg.provider,
    }
    result.bundle = ReportBundle.from_profiles(profiles, metadata, skipped)
    write_bundle(result.bundle, cfg.out_dir, cfg.toolchain.flag_prefix)
    result.invocations = len(driver.invocations)
    result.exit_code = 1 if not profiles else 0
    return result
