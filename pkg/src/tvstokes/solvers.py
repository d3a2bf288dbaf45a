"""Semi-implicit dual solvers for the two blocks of the coupled model.

Block 1 smooths the gradient field n against grad(f) under second-order
total variation and a coupling to grad(u); block 2 restores the image u
against f under first-order total variation coupled to n.  Both are solved
in their duals with the normalised update x' = (x + tau r) / (1 + tau |r|),
which keeps every dual inside the pointwise unit ball without an explicit
projection.

The primal recoveries are

    n = grad f - (alpha/eta1) P(div_tensor p) - (beta/eta1) P(q)
    u = f - (beta/eta2) div s

with P the curl-free projection, and the search directions collapse onto
those primals: r_p = jacobian(-n), r_q = n - grad u, r_s = n - grad u(s).
Note n depends on the duals only, not on u, so a warm-started sweep begins
exactly at the previous primal; the outer energy chain leans on that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diff_ops import div, div_tensor, grad, jacobian
from .fields import (
    ShapeMismatchError,
    as_scalar_field,
    cell_magnitude,
    max_cell_magnitude,
    norm_l2,
    sum_pointwise_euclid,
    zeros_tensor,
    zeros_vec,
)
from .projector import PoissonPlan, project

DUAL_FEASIBILITY_TOL = 1e-12


class InvalidParamsError(ValueError):
    """Model or iteration parameters violate their constraints."""


@dataclass(frozen=True)
class Params:
    """Model weights, dual step sizes, and iteration budgets.

    alpha, beta weight the two total-variation terms; eta1, eta2 weight the
    quadratic fidelities and must be strictly positive because both primal
    recoveries divide by them.  The default step sizes are conservative
    spectral bounds (tau_s <= 1/8 for div/grad, tau_p <= 1/64 for the
    second-order chain, tau_q <= 1/4) and may be overridden.
    """

    alpha: float = 0.05
    beta: float = 0.05
    eta1: float = 1.0
    eta2: float = 1.0
    tau_p: float = 1.0 / 64.0
    tau_q: float = 0.25
    tau_s: float = 0.125
    inner_iters: int = 300
    inner_tol: float = 1e-6
    outer_iters: int = 100
    outer_tol: float = 1e-5

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParamsError("alpha and beta must be nonnegative")
        if self.eta1 <= 0:
            raise InvalidParamsError("eta1 must be > 0: the gradient-field recovery divides by it")
        if self.eta2 <= 0:
            raise InvalidParamsError("eta2 must be > 0: the image recovery divides by it")
        for name in ("tau_p", "tau_q", "tau_s", "inner_tol", "outer_tol"):
            if getattr(self, name) <= 0:
                raise InvalidParamsError(f"{name} must be positive")
        if self.inner_iters < 1 or self.outer_iters < 1:
            raise InvalidParamsError("iteration budgets must be >= 1")


@dataclass
class Sub1State:
    """Duals p (tensor, vs the second-order term) and q (vector, vs the coupling), plus the recovered primal n."""

    p: np.ndarray
    q: np.ndarray
    n: np.ndarray


@dataclass
class Sub2State:
    """Dual s (vector, vs the image TV term) and the recovered image u."""

    s: np.ndarray
    u: np.ndarray


def check_dual_feasible(x: np.ndarray, tol: float = DUAL_FEASIBILITY_TOL) -> None:
    """Raise if any per-cell magnitude exceeds the unit ball beyond tol."""
    worst = max_cell_magnitude(x)
    if worst > 1.0 + tol:
        raise ValueError(f"dual infeasible: max cell magnitude {worst} > 1 + {tol:g}")


def dual_step(x: np.ndarray, r: np.ndarray, tau: float) -> np.ndarray:
    """Semi-implicit update (x + tau r) / (1 + tau |r|), per cell.

    Preserves per-cell magnitude <= 1 whenever the input satisfies it.
    """
    if tau <= 0:
        raise InvalidParamsError("dual step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x.shape != r.shape:
        raise ShapeMismatchError(f"dual and direction shapes differ: {x.shape} vs {r.shape}")
    mag = cell_magnitude(r)
    return (x + tau * r) / (1.0 + tau * mag[..., None])


def sub1_primal_from_duals(params: Params, plan: PoissonPlan, grad_f: np.ndarray,
                           st: Sub1State) -> np.ndarray:
    """Optimality recovery n = grad f - (alpha/eta1) P(div_tensor p) - (beta/eta1) P(q).

    The two projections are merged through linearity of P, costing one
    Poisson solve.  The result is itself curl-free because every term is.
    """
    correction = (params.alpha / params.eta1) * div_tensor(st.p)
    correction += (params.beta / params.eta1) * st.q
    return grad_f - project(plan, correction)


def sub1_directions(params: Params, plan: PoissonPlan, grad_f: np.ndarray,
                    grad_u: np.ndarray, st: Sub1State) -> tuple[np.ndarray, np.ndarray]:
    """Search directions for p and q; both collapse onto the recovered primal."""
    n = sub1_primal_from_duals(params, plan, grad_f, st)
    return jacobian(-n), n - grad_u


def sub1_energy(params: Params, plan: PoissonPlan, grad_f: np.ndarray,
                grad_u: np.ndarray, n: np.ndarray) -> float:
    """Block-1 objective at n, with the projection applied inside the TV terms."""
    pn = project(plan, n)
    return (params.alpha * sum_pointwise_euclid(jacobian(pn))
            + 0.5 * params.eta1 * norm_l2(n - grad_f) ** 2
            + params.beta * sum_pointwise_euclid(pn - grad_u))


def sub1_sweeps(params: Params, plan: PoissonPlan, grad_f: np.ndarray, grad_u: np.ndarray,
                p: np.ndarray, q: np.ndarray, iters: int, tol: float
                ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Run up to `iters` dual sweeps; stop early when the max per-cell dual
    change drops to `tol`.  Returns (p, q, n, last primal step norm)."""
    st = Sub1State(p=p, q=q, n=None)
    n = sub1_primal_from_duals(params, plan, grad_f, st)
    last_step = 0.0
    for _ in range(iters):
        r_p = jacobian(-n)
        r_q = n - grad_u
        p_new = dual_step(st.p, r_p, params.tau_p)
        q_new = dual_step(st.q, r_q, params.tau_q)
        change = max(max_cell_magnitude(p_new - st.p), max_cell_magnitude(q_new - st.q))
        st.p, st.q = p_new, q_new
        n_new = sub1_primal_from_duals(params, plan, grad_f, st)
        last_step = norm_l2(n_new - n)
        n = n_new
        if change <= tol:
            break
    return st.p, st.q, n, last_step


def solve_sub1(params: Params, plan: PoissonPlan, f: np.ndarray, u_prev: np.ndarray,
               warm: Sub1State | None = None) -> Sub1State:
    """Solve block 1 for the smoothed gradient field given the current image."""
    f = as_scalar_field(f)
    u_prev = as_scalar_field(u_prev)
    if f.shape != u_prev.shape:
        raise ShapeMismatchError(f"image shapes differ: {f.shape} vs {u_prev.shape}")
    h, w = f.shape
    if warm is None:
        p, q = zeros_tensor(h, w), zeros_vec(h, w)
    else:
        p, q = warm.p.copy(), warm.q.copy()
    grad_f = grad(f)
    grad_u = grad(u_prev)
    p, q, n, _ = sub1_sweeps(params, plan, grad_f, grad_u, p, q,
                             params.inner_iters, params.inner_tol)
    return Sub1State(p=p, q=q, n=n)


def sub2_primal_from_dual(params: Params, f: np.ndarray, st: Sub2State) -> np.ndarray:
    """Optimality recovery u = f - (beta/eta2) div s.  Preserves mean(f)."""
    return f - (params.beta / params.eta2) * div(st.s)


def sub2_direction(params: Params, f: np.ndarray, n: np.ndarray, st: Sub2State) -> np.ndarray:
    """Search direction for s, collapsed onto the recovered image."""
    u = sub2_primal_from_dual(params, f, st)
    return n - grad(u)


def sub2_energy(params: Params, f: np.ndarray, n: np.ndarray, u: np.ndarray) -> float:
    """Block-2 objective at u."""
    return (params.beta * sum_pointwise_euclid(grad(u) - n)
            + 0.5 * params.eta2 * norm_l2(u - f) ** 2)


def sub2_sweeps(params: Params, f: np.ndarray, n: np.ndarray, s: np.ndarray,
                iters: int, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Dual sweeps for block 2; returns (s, u, last primal step norm)."""
    st = Sub2State(s=s, u=None)
    u = sub2_primal_from_dual(params, f, st)
    last_step = 0.0
    for _ in range(iters):
        r_s = n - grad(u)
        s_new = dual_step(st.s, r_s, params.tau_s)
        change = max_cell_magnitude(s_new - st.s)
        st.s = s_new
        u_new = sub2_primal_from_dual(params, f, st)
        last_step = norm_l2(u_new - u)
        u = u_new
        if change <= tol:
            break
    return st.s, u, last_step


def solve_sub2(params: Params, f: np.ndarray, n: np.ndarray,
               warm: Sub2State | None = None) -> Sub2State:
    """Solve block 2 for the restored image given the smoothed gradient field."""
    f = as_scalar_field(f)
    n = np.asarray(n, dtype=np.float64)
    if n.shape != f.shape + (2,):
        raise ShapeMismatchError(f"gradient field {n.shape} does not match image {f.shape}")
    s = zeros_vec(*f.shape) if warm is None else warm.s.copy()
    s, u, _ = sub2_sweeps(params, f, n, s, params.inner_iters, params.inner_tol)
    return Sub2State(s=s, u=u)


def _power_norm(apply_op, like: np.ndarray, iters: int, seed: int) -> float:
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(like.shape)
    lam = 0.0
    for _ in range(iters):
        v = v / max(norm_l2(v), 1e-300)
        w = apply_op(v)
        lam = abs(float(np.sum(v * w)))
        v = w
    return lam


def estimate_step_sizes(plan: PoissonPlan, iters: int = 200, seed: int = 0
                        ) -> tuple[float, float, float]:
    """Spectral step-size suggestions (tau_p, tau_q, tau_s) for one grid shape.

    Power-iterates the symmetric compositions behind each dual chain and
    returns the reciprocal largest eigenvalues.  The Params defaults are the
    safe analytic floors of the same quantities.
    """
    h, w = plan.height, plan.width
    lam_p = _power_norm(lambda t: -jacobian(project(plan, div_tensor(t))),
                        zeros_tensor(h, w), iters, seed)
    lam_q = _power_norm(lambda v: project(plan, v), zeros_vec(h, w), iters, seed + 1)
    lam_s = _power_norm(lambda v: -grad(div(v)), zeros_vec(h, w), iters, seed + 2)
    return (1.0 / max(lam_p, 1e-300),
            1.0 / max(lam_q, 1e-300),
            1.0 / max(lam_s, 1e-300))
