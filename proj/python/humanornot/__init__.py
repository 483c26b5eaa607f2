"""Human or Not: sessions, bots, simulation and analytics."""

import json

from ._hon import (
    Gateway,
    HonError,
    analyze,
    assemble_prompt,
    compute_delay,
    normalize_frame,
    planted_corpus,
    screen,
    simulate,
    tag_record,
    wilson_interval,
)


def report(lines, strict=False):
    """Report as a dict."""
    return json.loads(analyze(lines, strict=strict, format="json"))


__all__ = [
    "Gateway",
    "HonError",
    "analyze",
    "assemble_prompt",
    "compute_delay",
    "normalize_frame",
    "planted_corpus",
    "report",
    "screen",
    "simulate",
    "tag_record",
    "wilson_interval",
]
