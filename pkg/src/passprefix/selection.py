"""Improvement percentages, lexicographic best-config selection and suite summaries.

Sign convention: negative percentages are reductions relative to the
baseline (the full standard level).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .measurement import ResourceMeasurement
from .toolchain import BuildStatus

__all__ = [
    "CRITERIA",
    "IMPROVED_THRESHOLD_PCT",
    "AnalysisError",
    "ConfigResult",
    "CompilationProfile",
    "BenchmarkBest",
    "SuiteSummary",
    "improvement_pct",
    "parse_criteria",
    "select_best",
    "build_profile",
    "summarize",
]

CRITERIA = ("time", "energy", "size")
IMPROVED_THRESHOLD_PCT = -1.0


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ConfigResult:
    config_index: int
    label: str
    status: BuildStatus
    measurement: Optional[ResourceMeasurement] = None
    flags: tuple[str, ...] = ()
    d_time_pct: Optional[float] = None
    d_energy_pct: Optional[float] = None
    d_size_pct: Optional[float] = None
    reason: str = ""

    @property
    def total_flags(self) -> int:
        return len(self.flags)

    @property
    def measured(self) -> bool:
        return self.status is BuildStatus.BUILT and self.measurement is not None

    def delta(self, criterion: str) -> Optional[float]:
        return {"time": self.d_time_pct, "energy": self.d_energy_pct, "size": self.d_size_pct}[criterion]


@dataclass(frozen=True)
class CompilationProfile:
    benchmark: str
    baseline_config_index: int
    results: tuple[ConfigResult, ...]
    best_config_index: int

    def result(self, index: int) -> ConfigResult:
        for r in self.results:
            if r.config_index == index:
                return r
        raise KeyError(index)

    @property
    def best(self) -> ConfigResult:
        return self.result(self.best_config_index)


@dataclass(frozen=True)
class BenchmarkBest:
    name: str
    best_index: int
    best_label: str
    d_time_pct: Optional[float]
    d_energy_pct: Optional[float]
    d_size_pct: Optional[float]


@dataclass(frozen=True)
class SuiteSummary:
    per_benchmark: tuple[BenchmarkBest, ...]
    mean_time_improvement_pct: Optional[float]
    improved_count: int
    benchmark_count: int
    improvement_range_pct: Optional[tuple[float, float]] = None
    configs_total: int = 0
    configs_nonempty: int = 0
    configs_built: int = 0
    configs_valid: int = 0
    configs_measured: int = 0


def improvement_pct(value: float, baseline: float) -> float:
    if not baseline > 0:
        raise AnalysisError(f"baseline must be positive, got {baseline!r}")
    return (value - baseline) / baseline * 100.0


def parse_criteria(spec: str | Sequence[str] | None) -> tuple[str, ...]:
    if spec is None:
        return CRITERIA
    if isinstance(spec, str):
        spec = [s.strip() for s in spec.split(",") if s.strip()]
    crit = tuple(spec)
    if sorted(crit) != sorted(CRITERIA):
        raise ValueError(f"criteria must be a permutation of {','.join(CRITERIA)}, got {crit}")
    return crit


def _select(results: Sequence[ConfigResult], epsilon_pct: float, criteria: Sequence[str]) -> int:
    candidates = [r for r in results if r.measured and r.d_time_pct is not None]
    if not candidates:
        raise AnalysisError("no measured results to select from")
    for criterion in criteria:
        values = [r.delta(criterion) for r in candidates]
        if any(v is None for v in values):
            continue
        best = min(values)
        candidates = [r for r, v in zip(candidates, values) if v <= best + epsilon_pct]
    return max(r.config_index for r in candidates)


def select_best(profile: CompilationProfile | Sequence[ConfigResult], epsilon_pct: float = 0.0,
                criteria: Sequence[str] = CRITERIA) -> int:
    """Lexicographic choice over the criteria tiers.

    Each tier keeps the candidates within ``epsilon_pct`` of the tier
    minimum; a tier is skipped when any remaining candidate lacks the value.
    Remaining ties go to the largest config index.
    """
    results = profile.results if isinstance(profile, CompilationProfile) else profile
    return _select(results, epsilon_pct, parse_criteria(criteria))


def build_profile(benchmark: str, results: Sequence[ConfigResult], baseline_index: int,
                  epsilon_pct: float = 0.0, criteria: Sequence[str] = CRITERIA) -> CompilationProfile:
    by_index = {r.config_index: r for r in results}
    base = by_index.get(baseline_index)
    if base is None or not base.measured:
        status = "missing" if base is None else base.status.value
        raise AnalysisError(f"{benchmark}: baseline config {baseline_index} not usable ({status})")
    bm = base.measurement

    def pct(value, ref):
        if value is None or ref is None:
            return None
        return improvement_pct(value, ref)

    filled = []
    for r in sorted(results, key=lambda r: r.config_index):
        if r.measured:
            m = r.measurement
            r = replace(
                r,
                d_time_pct=pct(m.exec_time_s, bm.exec_time_s),
                d_energy_pct=pct(m.energy_j, bm.energy_j),
                d_size_pct=pct(m.code_size_b, bm.code_size_b),
            )
        else:
            r = replace(r, d_time_pct=None, d_energy_pct=None, d_size_pct=None)
        filled.append(r)
    best = _select(filled, epsilon_pct, parse_criteria(criteria))
    return CompilationProfile(benchmark, baseline_index, tuple(filled), best)


def summarize(profiles: Sequence[CompilationProfile]) -> SuiteSummary:
    per = []
    for p in profiles:
        b = p.best
        per.append(BenchmarkBest(p.benchmark, b.config_index, b.label,
                                 b.d_time_pct, b.d_energy_pct, b.d_size_pct))
    times = [b.d_time_pct for b in per]
    improved = [t for t in times if t <= IMPROVED_THRESHOLD_PCT]
    all_results = [r for p in profiles for r in p.results]
    return SuiteSummary(
        per_benchmark=tuple(per),
        mean_time_improvement_pct=statistics.fmean(times) if times else None,
        improved_count=len(improved),
        benchmark_count=len(per),
        improvement_range_pct=(max(improved), min(improved)) if improved else None,
        configs_total=len(all_results),
        configs_nonempty=sum(1 for r in all_results if r.config_index > 0),
        configs_built=sum(1 for r in all_results if r.status is not BuildStatus.COMPILE_FAILED),
        configs_valid=sum(1 for r in all_results
                          if r.status in (BuildStatus.BUILT, BuildStatus.UNMEASURED)),
        configs_measured=sum(1 for r in all_results if r.measured),
    )
