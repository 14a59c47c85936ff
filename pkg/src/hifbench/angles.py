"""Angle wrapping helpers. All phase math in this package is in degrees."""

import numpy as np


def wrap_deg(angle):
    """Wrap an angle (scalar or array) to the half-open interval (-180, 180]."""
    return 180.0 - np.mod(180.0 - np.asarray(angle, dtype=float), 360.0)


def wrap_deg_scalar(angle: float) -> float:
    """Scalar version of :func:`wrap_deg` returning a plain float."""
    return float(180.0 - np.mod(180.0 - angle, 360.0))
