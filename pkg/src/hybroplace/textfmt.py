"""Shortest round-trip decimal formatting shared by writers and the CLI."""

from __future__ import annotations

import numpy as np


def dec(x: float) -> str:
    """Shortest decimal string that parses back to exactly the same float.

    Integral values print without a trailing ".0" ("12", not "12.0").
    """
    return np.format_float_positional(float(x), unique=True, trim="-")
