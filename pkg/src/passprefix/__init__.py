"""Explore the prefixes of a standard optimization level's pass pipeline.

Each prefix ends at a transformation pass and keeps the original pass
order; every prefix is compiled, validated and measured, and the best one
per benchmark is picked by execution time, then energy, then code size.
"""

__version__ = "0.1.0"

from .pipeline import (  # noqa: E402
    OptConfig,
    PassEntry,
    PassKind,
    PassPipeline,
    config_label,
    generate_configs,
    parse_pipeline,
    serialize_pipeline,
)
from .selection import build_profile, improvement_pct, select_best, summarize  # noqa: E402
