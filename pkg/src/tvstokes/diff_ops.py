"""Discrete first-order operators arranged in exactly adjoint pairs.

grad uses forward differences with a zero in the trailing row/column
(replicate boundary); div is constructed as the negative adjoint of grad,
so <grad u, p> + <u, div p> = 0 holds to round-off by construction, and
sum(div p) = 0 for every p.  jacobian / div_tensor repeat the pairing
componentwise, and laplacian is literally div(grad(u)) so that the cosine
transform diagonalises it exactly.
"""

from __future__ import annotations

import numpy as np

from .fields import ShapeMismatchError


def grad(u: np.ndarray) -> np.ndarray:
    """Forward-difference gradient of a scalar field, shape (H, W, 2)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ShapeMismatchError(f"grad expects a scalar field, got {u.shape}")
    out = np.zeros(u.shape + (2,))
    out[:, :-1, 0] = u[:, 1:] - u[:, :-1]
    out[:-1, :, 1] = u[1:, :] - u[:-1, :]
    return out


def div(p: np.ndarray) -> np.ndarray:
    """Divergence of a vector field: the negative adjoint of grad.

    Backward differences with truncated boundary; the trailing component
    along each axis never contributes, mirroring the zero grad puts there.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[-1] != 2:
        raise ShapeMismatchError(f"div expects a vector field, got {p.shape}")
    h, w = p.shape[:2]
    out = np.zeros((h, w))
    px = p[..., 0]
    py = p[..., 1]
    if w > 1:
        out[:, 0] += px[:, 0]
        out[:, 1:w - 1] += px[:, 1:w - 1] - px[:, 0:w - 2]
        out[:, w - 1] -= px[:, w - 2]
    if h > 1:
        out[0, :] += py[0, :]
        out[1:h - 1, :] += py[1:h - 1, :] - py[0:h - 2, :]
        out[h - 1, :] -= py[h - 2, :]
    return out


def jacobian(n: np.ndarray) -> np.ndarray:
    """Componentwise forward-difference gradient of a vector field, shape (H, W, 4)."""
    n = np.asarray(n, dtype=np.float64)
    if n.ndim != 3 or n.shape[-1] != 2:
        raise ShapeMismatchError(f"jacobian expects a vector field, got {n.shape}")
    out = np.zeros(n.shape[:2] + (4,))
    out[..., 0:2] = grad(n[..., 0])
    out[..., 2:4] = grad(n[..., 1])
    return out


def div_tensor(p: np.ndarray) -> np.ndarray:
    """Row-wise divergence of a tensor field: the negative adjoint of jacobian."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[-1] != 4:
        raise ShapeMismatchError(f"div_tensor expects a tensor field, got {p.shape}")
    out = np.zeros(p.shape[:2] + (2,))
    out[..., 0] = div(p[..., 0:2])
    out[..., 1] = div(p[..., 2:4])
    return out


def laplacian(u: np.ndarray) -> np.ndarray:
    """Neumann 5-point laplacian, defined as the composition div(grad(u))."""
    return div(grad(u))
