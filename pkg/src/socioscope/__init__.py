"""Socioeconomic consumption-pattern analytics toolkit.

Pipeline stages: ingest -> socio (classes) -> spending -> nullmodel ->
catnet -> dynamics, plus a synthetic-data generator with planted ground
truth for verification. See the README for the CLI entry points.
"""

from socioscope.ingest import (
    CategoryDirectory,
    CommEvent,
    EgoProfile,
    SocialGraph,
    TransactionRecord,
    assemble_profiles,
    build_graph,
    filter_active_core,
    largest_component,
    load_default_directory,
    parse_transactions,
)

__version__ = "0.1.0"

__all__ = [
    "CategoryDirectory",
    "CommEvent",
    "EgoProfile",
    "SocialGraph",
    "TransactionRecord",
    "assemble_profiles",
    "build_graph",
    "filter_active_core",
    "largest_component",
    "load_default_directory",
    "parse_transactions",
]
