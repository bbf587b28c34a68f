"""Pass pipelines of a standard optimization level and their prefix configurations.

A pipeline file holds one entry per line: a kind tag (``T`` for a
transformation, ``A`` for anything that is not a cut point, usually an
analysis) followed by one space and the pass name. Blank lines and lines
starting with ``#`` are ignored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

__all__ = [
    "PassKind",
    "PassEntry",
    "PassPipeline",
    "OptConfig",
    "PipelineParseError",
    "parse_pipeline",
    "serialize_pipeline",
    "load_pipeline",
    "generate_configs",
    "config_label",
]


class PipelineParseError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno
        self.line = line
        self.reason = reason


class PassKind(enum.Enum):
    TRANSFORMATION = "T"
    ANALYSIS = "A"


@dataclass(frozen=True)
class PassEntry:
    name: str
    kind: PassKind
    position: int
    occurrence: int

    @property
    def is_transformation(self) -> bool:
        return self.kind is PassKind.TRANSFORMATION


@dataclass(frozen=True)
class PassPipeline:
    entries: tuple[PassEntry, ...] = ()
    source_label: str = ""
    level: str = ""

    @classmethod
    def from_passes(
        cls,
        passes: Iterable[tuple[str, PassKind | str]],
        source_label: str = "",
        level: str = "",
    ) -> "PassPipeline":
        """Build a pipeline from ``(name, kind)`` pairs, numbering positions and occurrences."""
        seen: dict[str, int] = {}
        entries = []
        for position, (name, kind) in enumerate(passes):
            _check_name(name)
            seen[name] = seen.get(name, 0) + 1
            entries.append(PassEntry(name, PassKind(kind), position, seen[name]))
        return cls(tuple(entries), source_label, level)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def transformation_count(self) -> int:
        return sum(1 for e in self.entries if e.is_transformation)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class OptConfig:
    index: int
    flags: tuple[str, ...] = field(default_factory=tuple)
    last_transformation: Optional[str] = None

    @property
    def total_flags(self) -> int:
        return len(self.flags)

    @property
    def label(self) -> str:
        return config_label(self)


def _check_name(name: str) -> None:
    if not name or any(ch.isspace() for ch in name):
        raise ValueError(f"invalid pass name {name!r}")


def parse_pipeline(text: str, source_label: str = "", level: str = "") -> PassPipeline:
    """Parse the pipeline file format.

    ``# source: ...`` and ``# level: ...`` header comments fill in the
    pipeline metadata when the caller does not supply it.
    """
    passes: list[tuple[str, PassKind]] = []
    header: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep and key.strip() in ("source", "level"):
                header.setdefault(key.strip(), value.strip())
            continue
        tag, sep, name = line.partition(" ")
        if not sep:
            raise PipelineParseError(lineno, raw, "expected '<T|A> <pass-name>'")
        if tag not in ("T", "A"):
            raise PipelineParseError(lineno, raw, f"unknown kind tag {tag!r}")
        name = name.strip()
        if not name or any(ch.isspace() for ch in name):
            raise PipelineParseError(lineno, raw, "empty or malformed pass name")
        passes.append((name, PassKind(tag)))
    return PassPipeline.from_passes(
        passes,
        source_label=source_label or header.get("source", ""),
        level=level or header.get("level", ""),
    )


def serialize_pipeline(pipeline: PassPipeline) -> str:
    lines = []
    if pipeline.source_label:
        lines.append(f"# source: {pipeline.source_label}")
    if pipeline.level:
        lines.append(f"# level: {pipeline.level}")
    lines.extend(f"{e.kind.value} {e.name}" for e in pipeline.entries)
    return "\n".join(lines) + "\n" if lines else ""


def load_pipeline(path) -> PassPipeline:
    with open(path, encoding="utf-8") as f:
        return parse_pipeline(f.read())


def generate_configs(pipeline: PassPipeline) -> list[OptConfig]:
    """Return every prefix configuration, from the empty one up to the full level.

    Config ``i`` keeps all entries up to and including the i-th transformation
    occurrence; entries after that cut (including trailing analyses after the
    last transformation) are dropped. Ordering is never changed.
    """
    configs = [OptConfig(0)]
    names = pipeline.names
    index = 0
    for entry in pipeline.entries:
        if entry.is_transformation:
            index += 1
            configs.append(
                OptConfig(index, tuple(names[: entry.position + 1]), entry.name)
            )
    return configs


def config_label(config: OptConfig) -> str:
    if config.index == 0:
        return "-O0 (0)"
    return f"{config.last_transformation} ({config.total_flags})"
