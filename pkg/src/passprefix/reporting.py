"""CSV, JSON and plot-data reports.

Output layout under ``out_dir``::

    summary.json
    <benchmark>/profile.csv     one row per config
    <benchmark>/profile.dat     label and the three deltas, for plotting
    <benchmark>/profile.json    full-precision profile incl. flag lists
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .measurement import ResourceMeasurement
from .selection import CompilationProfile, ConfigResult, SuiteSummary, summarize
from .toolchain import BuildStatus

__all__ = [
    "CSV_HEADER",
    "ReportBundle",
    "fmt_pct",
    "fmt_float",
    "emit_profile_csv",
    "emit_plot_data",
    "emit_summary",
    "profile_to_json",
    "profile_from_json",
    "write_bundle",
    "read_profile",
]

CSV_HEADER = [
    "config_index", "label", "total_flags", "status",
    "time_s", "energy_j", "size_b",
    "d_time_pct", "d_energy_pct", "d_size_pct",
]


@dataclass
class ReportBundle:
    summary: SuiteSummary
    profiles: list[CompilationProfile]
    metadata: dict = field(default_factory=dict)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @classmethod
    def from_profiles(cls, profiles: Sequence[CompilationProfile], metadata=None, skipped=()):
        return cls(summarize(profiles), list(profiles), dict(metadata or {}), list(skipped))


def fmt_pct(value: Optional[float]) -> str:
    if value is None:
        return ""
    s = f"{value:.2f}"
    return "0.00" if s == "-0.00" else s


def fmt_float(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


def _round_pct(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(fmt_pct(value))


def emit_profile_csv(profile: CompilationProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in profile.results:
        m = r.measurement
        w.writerow([
            r.config_index, r.label, r.total_flags, r.status.value,
            fmt_float(m.exec_time_s) if m else "",
            fmt_float(m.energy_j) if m else "",
            m.code_size_b if m else "",
            fmt_pct(r.d_time_pct), fmt_pct(r.d_energy_pct), fmt_pct(r.d_size_pct),
        ])
    return buf.getvalue()


def emit_plot_data(profile: CompilationProfile) -> str:
    """Whitespace-separated columns; labels are double-quoted, missing values are NaN."""
    lines = ["# label d_time_pct d_energy_pct d_size_pct"]
    for r in profile.results:
        cols = [fmt_pct(v) or "NaN" for v in (r.d_time_pct, r.d_energy_pct, r.d_size_pct)]
        lines.append(f'"{r.label}" ' + " ".join(cols))
    return "\n".join(lines) + "\n"


def emit_summary(bundle: ReportBundle) -> str:
    s = bundle.summary
    rng = s.improvement_range_pct
    doc = {
        "mean_time_improvement_pct": _round_pct(s.mean_time_improvement_pct),
        "improved_count": s.improved_count,
        "benchmark_count": s.benchmark_count,
        "per_benchmark": [
            {
                "name": b.name,
                "best_label": b.best_label,
                "best_index": b.best_index,
                "d_time_pct": _round_pct(b.d_time_pct),
                "d_energy_pct": _round_pct(b.d_energy_pct),
                "d_size_pct": _round_pct(b.d_size_pct),
            }
            for b in s.per_benchmark
        ],
        "metadata": bundle.metadata,
        "improvement_range_pct": None if rng is None else [_round_pct(rng[0]), _round_pct(rng[1])],
        "config_counts": {
            "total": s.configs_total,
            "nonempty": s.configs_nonempty,
            "built": s.configs_built,
            "valid": s.configs_valid,
            "measured": s.configs_measured,
        },
        "skipped": [{"name": n, "reason": why} for n, why in bundle.skipped],
    }
    return json.dumps(doc, indent=2) + "\n"


def profile_to_json(profile: CompilationProfile, flag_prefix: str = "-") -> str:
    # every config's flags are a prefix of the longest one
    longest = max((r.flags for r in profile.results), key=len, default=())
    doc = {
        "benchmark": profile.benchmark,
        "baseline_config_index": profile.baseline_config_index,
        "best_config_index": profile.best_config_index,
        "flag_prefix": flag_prefix,
        "flags": list(longest),
        "results": [
            {
                "config_index": r.config_index,
                "label": r.label,
                "status": r.status.value,
                "reason": r.reason,
                "total_flags": r.total_flags,
                "measurement": r.measurement.to_dict() if r.measurement else None,
                "d_time_pct": r.d_time_pct,
                "d_energy_pct": r.d_energy_pct,
                "d_size_pct": r.d_size_pct,
            }
            for r in profile.results
        ],
    }
    # compact: this file is for tools, profile.csv is the readable one
    return json.dumps(doc, separators=(",", ":")) + "\n"


def profile_from_json(text: str) -> tuple[CompilationProfile, str]:
    """Inverse of ``profile_to_json``; returns the profile and its flag prefix."""
    doc = json.loads(text)
    flags = doc["flags"]
    results = tuple(
        ConfigResult(
            config_index=r["config_index"],
            label=r["label"],
            status=BuildStatus(r["status"]),
            measurement=ResourceMeasurement.from_dict(r["measurement"]) if r["measurement"] else None,
            flags=tuple(flags[: r["total_flags"]]),
            d_time_pct=r["d_time_pct"],
            d_energy_pct=r["d_energy_pct"],
            d_size_pct=r["d_size_pct"],
            reason=r.get("reason", ""),
        )
        for r in doc["results"]
    )
    profile = CompilationProfile(
        doc["benchmark"], doc["baseline_config_index"], results, doc["best_config_index"]
    )
    return profile, doc.get("flag_prefix", "-")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_bundle(bundle: ReportBundle, out_dir, flag_prefix: str = "-") -> None:
    out_dir = Path(out_dir)
    for p in bundle.profiles:
        d = out_dir / p.benchmark
        _write(d / "profile.csv", emit_profile_csv(p))
        _write(d / "profile.dat", emit_plot_data(p))
        _write(d / "profile.json", profile_to_json(p, flag_prefix))
    _write(out_dir / "summary.json", emit_summary(bundle))


def read_profile(out_dir, benchmark: str) -> tuple[CompilationProfile, str]:
    return profile_from_json((Path(out_dir) / benchmark / "profile.json").read_text(encoding="utf-8"))
