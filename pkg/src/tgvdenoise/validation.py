"""Input validation helpers shared by the estimator, solver and CLI."""

import numpy as np


def check_image(X, name="X"):
    """Validate and return a 2D float64 image (H, W >= 2, finite)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got ndim={X.ndim}")
    if X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError(f"{name} must be at least 2x2, got {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return X


def check_field(a, planes, name="field", like=None):
    """Validate a stacked (planes, H, W) field, optionally shape-matched."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 3 or a.shape[0] != planes:
        raise ValueError(f"{name} must have shape ({planes}, H, W), got {a.shape}")
    if like is not None and a.shape[1:] != np.shape(like)[-2:]:
        raise ValueError(f"{name} shape {a.shape[1:]} does not match {np.shape(like)[-2:]}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return a


def check_spacing(h):
    h = float(h)
    if not np.isfinite(h) or h <= 0.0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    return h


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
