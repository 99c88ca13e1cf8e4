"""Locale-independent number formatting shared by every CSV writer."""
from __future__ import annotations

import math


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same float."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)
