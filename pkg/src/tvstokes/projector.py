"""Orthogonal projection onto discretely curl-free (gradient) fields.

project(plan, n) = grad(poisson_pinv(plan, div(n))).  The Poisson
pseudoinverse inverts the Neumann laplacian on the zero-mean subspace via a
DCT-II diagonalisation: with div and grad as defined in diff_ops, the mode
(k, l) cosine basis vector is an exact eigenvector of div(grad(.)) with
eigenvalue 2cos(pi k/H) + 2cos(pi l/W) - 4.  The (0, 0) mode (constants) is
pinned to zero, which is the pseudoinverse restricted to zero-mean data and
is lossless here because div outputs always have zero mean.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .diff_ops import div, grad
from .fields import ShapeMismatchError, norm_l2

MEAN_RESIDUAL_REL_TOL = 1e-8


class MeanResidualError(ValueError):
    """Right-hand side has a mean too large to come from a divergence."""


class PoissonPlan:
    """Precomputed inverse eigenvalues for one grid shape.

    Immutable after construction; one plan may be shared across concurrent
    solves on fields of the matching shape.
    """

    def __init__(self, height: int, width: int):
        if height < 1 or width < 1:
            raise ValueError(f"plan needs positive grid sizes, got {height}x{width}")
        self.height = int(height)
        self.width = int(width)
        lam_y = 2.0 * np.cos(np.pi * np.arange(self.height) / self.height) - 2.0
        lam_x = 2.0 * np.cos(np.pi * np.arange(self.width) / self.width) - 2.0
        lam = lam_y[:, None] + lam_x[None, :]
        inv = np.zeros_like(lam)
        nonzero = lam != 0.0
        inv[nonzero] = 1.0 / lam[nonzero]
        inv.flags.writeable = False
        self.inv_eigenvalues = inv

    def __repr__(self) -> str:
        return f"PoissonPlan({self.height}x{self.width})"


def poisson_pinv(plan: PoissonPlan, rhs: np.ndarray) -> np.ndarray:
    """Zero-mean w with laplacian(w) = rhs - mean(rhs).

    rhs must be (numerically) zero-mean, i.e. an output of div; a mean above
    1e-8 * ||rhs|| signals a caller bug and raises.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (plan.height, plan.width):
        raise ShapeMismatchError(f"plan is {plan.height}x{plan.width}, rhs is {rhs.shape}")
    scale = norm_l2(rhs)
    if abs(float(rhs.mean())) > MEAN_RESIDUAL_REL_TOL * scale:
        raise MeanResidualError(
            f"rhs mean {rhs.mean():.3e} exceeds {MEAN_RESIDUAL_REL_TOL:g} * ||rhs|| = "
            f"{MEAN_RESIDUAL_REL_TOL * scale:.3e}; only divergence images are valid inputs"
        )
    coef = dctn(rhs, type=2, norm="ortho")
    coef *= plan.inv_eigenvalues
    return idctn(coef, type=2, norm="ortho")


def project(plan: PoissonPlan, n: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a vector field onto gradient fields."""
    n = np.asarray(n, dtype=np.float64)
    if n.ndim != 3 or n.shape[-1] != 2:
        raise ShapeMismatchError(f"project expects a vector field, got {n.shape}")
    if n.shape[:2] != (plan.height, plan.width):
        raise ShapeMismatchError(f"plan is {plan.height}x{plan.width}, field is {n.shape[:2]}")
    return grad(poisson_pinv(plan, div(n)))
