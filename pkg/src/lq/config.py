"""Numeric tolerance shared by every module.

The default is 1e-9. Setting ``LQ_TOLERANCE`` in the environment overrides it,
which is occasionally handy for exploring borderline inputs but makes results
depend on the caller's shell, so prefer the default.
"""
from __future__ import annotations

import os

DEFAULT_TOLERANCE = 1e-9


def tolerance() -> float:
    raw = os.environ.get("LQ_TOLERANCE")
    if raw is None or raw.strip() == "":
        return DEFAULT_TOLERANCE
    try:
        value = float(raw)
    except ValueError:
        return DEFAULT_TOLERANCE
    return value if value > 0 else DEFAULT_TOLERANCE
