"""Dense 2-D field containers: scalars, 2-vectors, and 4-tensors on a grid.

Fields are plain float64 ndarrays with a fixed layout:

* scalar field: shape (H, W)
* vector field: shape (H, W, 2), component 0 along columns (x), 1 along rows (y)
* tensor field: shape (H, W, 4), components (dx v1, dy v1, dx v2, dy v2)

Grid spacing is 1; every downstream quantity is a ratio of norms, so a global
spacing factor would cancel.  All operations are pure and never mutate their
inputs.
"""

from __future__ import annotations

import numpy as np

VEC_COMPONENTS = 2
TENSOR_COMPONENTS = 4


class ShapeMismatchError(ValueError):
    """Operands do not share the required shape or field kind."""


def as_scalar_field(values) -> np.ndarray:
    """Validate and return a (H, W) float64 scalar field."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ShapeMismatchError(f"scalar field must be (H, W) with H, W >= 1, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("scalar field contains non-finite values")
    return a


def as_vec_field(values) -> np.ndarray:
    """Validate and return a (H, W, 2) float64 vector field."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 3 or a.shape[-1] != VEC_COMPONENTS or min(a.shape[:2]) < 1:
        raise ShapeMismatchError(f"vector field must be (H, W, 2), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector field contains non-finite values")
    return a


def as_tensor_field(values) -> np.ndarray:
    """Validate and return a (H, W, 4) float64 tensor field."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 3 or a.shape[-1] != TENSOR_COMPONENTS or min(a.shape[:2]) < 1:
        raise ShapeMismatchError(f"tensor field must be (H, W, 4), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("tensor field contains non-finite values")
    return a


def zeros_scalar(height: int, width: int) -> np.ndarray:
    return np.zeros((height, width))


def zeros_vec(height: int, width: int) -> np.ndarray:
    return np.zeros((height, width, VEC_COMPONENTS))


def zeros_tensor(height: int, width: int) -> np.ndarray:
    return np.zeros((height, width, TENSOR_COMPONENTS))


def inner(a, b) -> float:
    """Sum over all cells and components of a*b.  Symmetric and bilinear."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"inner product needs matching fields, got {a.shape} and {b.shape}")
    return float(np.sum(a * b))


def norm_l2(a) -> float:
    """Euclidean norm sqrt(inner(a, a))."""
    return float(np.sqrt(inner(a, a)))


def cell_magnitude(v) -> np.ndarray:
    """Per-cell Euclidean magnitude of a vector or tensor field, shape (H, W)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 3 or v.shape[-1] not in (VEC_COMPONENTS, TENSOR_COMPONENTS):
        raise ShapeMismatchError(f"cell magnitude needs a vector or tensor field, got {v.shape}")
    return np.sqrt(np.sum(v * v, axis=-1))


def sum_pointwise_euclid(v) -> float:
    """Isotropic total-variation sum: per-cell Euclidean magnitudes, summed."""
    return float(np.sum(cell_magnitude(v)))


def max_cell_magnitude(v) -> float:
    """Largest per-cell Euclidean magnitude; 0 for degenerate empty slices."""
    return float(np.max(cell_magnitude(v)))
