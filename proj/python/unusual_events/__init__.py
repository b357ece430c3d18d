"""Unusual commits, issues and pull requests in GitHub repositories."""

from ._core import (
    Event,
    OddsRatio,
    Snapshot,
    Summary,
    __version__,
    detect,
    event_types,
    frequency_report,
    load_snapshot,
    odds_ratio,
    qualifies_for_sample,
    render_event_message,
    run_cli,
    summarize,
    useful_event_types,
)

__all__ = [
    "Event",
    "OddsRatio",
    "Snapshot",
    "Summary",
    "__version__",
    "detect",
    "event_types",
    "frequency_report",
    "load_snapshot",
    "odds_ratio",
    "qualifies_for_sample",
    "render_event_message",
    "run_cli",
    "summarize",
    "useful_event_types",
]
