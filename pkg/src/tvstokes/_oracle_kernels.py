"""Jitted gradient-descent kernels behind oracle_minimize.

The smoothed objectives put curvature of order alpha/epsilon on cells that
sit at a total-variation kink, so certifying a minimum can take millions of
descent steps; these kernels make each step cheap.  The stencils are written
out as explicit loops rather than reusing diff_ops, so the oracle shares no
array code with the solvers it certifies; oracle.py cross-checks them
against its plain NumPy closures.

Layout conventions match fields.py: scalars (H, W), vectors (H, W, 2) with
component 0 along columns, tensors (H, W, 4) as (dx v1, dy v1, dx v2, dy v2).
"""

from __future__ import annotations

import numpy as np
from numba import njit

ARMIJO_C = 1e-4
BACKTRACK = 0.5
EXPAND = 1.25
MIN_STEP = 1e-20
MAX_STEP = 1e12


@njit(cache=True)
def _grad2(u, out):
    h, w = u.shape
    for i in range(h):
        for j in range(w):
            out[i, j, 0] = u[i, j + 1] - u[i, j] if j < w - 1 else 0.0
            out[i, j, 1] = u[i + 1, j] - u[i, j] if i < h - 1 else 0.0


@njit(cache=True)
def _div_cell(vx, vy, i, j, h, w):
    acc = 0.0
    if w > 1:
        if j == 0:
            acc += vx[i, 0]
        elif j == w - 1:
            acc -= vx[i, j - 1]
        else:
            acc += vx[i, j] - vx[i, j - 1]
    if h > 1:
        if i == 0:
            acc += vy[0, j]
        elif i == h - 1:
            acc -= vy[i - 1, j]
        else:
            acc += vy[i, j] - vy[i - 1, j]
    return acc


@njit(cache=True)
def _sub1_value(phi, grad_f, grad_u, alpha, beta, eta1, eps):
    h, w = phi.shape
    n = np.empty((h, w, 2))
    _grad2(phi, n)
    total = 0.0
    eps2 = eps * eps
    for i in range(h):
        for j in range(w):
            jxx = n[i, j + 1, 0] - n[i, j, 0] if j < w - 1 else 0.0
            jxy = n[i + 1, j, 0] - n[i, j, 0] if i < h - 1 else 0.0
            jyx = n[i, j + 1, 1] - n[i, j, 1] if j < w - 1 else 0.0
            jyy = n[i + 1, j, 1] - n[i, j, 1] if i < h - 1 else 0.0
            total += alpha * np.sqrt(jxx * jxx + jxy * jxy + jyx * jyx + jyy * jyy + eps2)
            dx = n[i, j, 0] - grad_f[i, j, 0]
            dy = n[i, j, 1] - grad_f[i, j, 1]
            total += 0.5 * eta1 * (dx * dx + dy * dy)
            cx = n[i, j, 0] - grad_u[i, j, 0]
            cy = n[i, j, 1] - grad_u[i, j, 1]
            total += beta * np.sqrt(cx * cx + cy * cy + eps2)
    return total


@njit(cache=True)
def _sub1_grad(phi, grad_f, grad_u, alpha, beta, eta1, eps, out):
    h, w = phi.shape
    n = np.empty((h, w, 2))
    _grad2(phi, n)
    eps2 = eps * eps
    wj = np.empty((h, w, 4))
    dn = np.empty((h, w, 2))
    for i in range(h):
        for j in range(w):
            jxx = n[i, j + 1, 0] - n[i, j, 0] if j < w - 1 else 0.0
            jxy = n[i + 1, j, 0] - n[i, j, 0] if i < h - 1 else 0.0
            jyx = n[i, j + 1, 1] - n[i, j, 1] if j < w - 1 else 0.0
            jyy = n[i + 1, j, 1] - n[i, j, 1] if i < h - 1 else 0.0
            rho = np.sqrt(jxx * jxx + jxy * jxy + jyx * jyx + jyy * jyy + eps2)
            wj[i, j, 0] = jxx / rho
            wj[i, j, 1] = jxy / rho
            wj[i, j, 2] = jyx / rho
            wj[i, j, 3] = jyy / rho
    for i in range(h):
        for j in range(w):
            cx = n[i, j, 0] - grad_u[i, j, 0]
            cy = n[i, j, 1] - grad_u[i, j, 1]
            rho = np.sqrt(cx * cx + cy * cy + eps2)
            dn[i, j, 0] = (-alpha * _div_cell(wj[..., 0], wj[..., 1], i, j, h, w)
                           + eta1 * (n[i, j, 0] - grad_f[i, j, 0]) + beta * cx / rho)
            dn[i, j, 1] = (-alpha * _div_cell(wj[..., 2], wj[..., 3], i, j, h, w)
                           + eta1 * (n[i, j, 1] - grad_f[i, j, 1]) + beta * cy / rho)
    for i in range(h):
        for j in range(w):
            out[i, j] = -_div_cell(dn[..., 0], dn[..., 1], i, j, h, w)


@njit(cache=True)
def _sub2_value(u, f, n_fixed, beta, eta2, eps):
    h, w = u.shape
    total = 0.0
    eps2 = eps * eps
    for i in range(h):
        for j in range(w):
            gx = (u[i, j + 1] - u[i, j] if j < w - 1 else 0.0) - n_fixed[i, j, 0]
            gy = (u[i + 1, j] - u[i, j] if i < h - 1 else 0.0) - n_fixed[i, j, 1]
            total += beta * np.sqrt(gx * gx + gy * gy + eps2)
            d = u[i, j] - f[i, j]
            total += 0.5 * eta2 * d * d
    return total


@njit(cache=True)
def _sub2_grad(u, f, n_fixed, beta, eta2, eps, out):
    h, w = u.shape
    eps2 = eps * eps
    wc = np.empty((h, w, 2))
    for i in range(h):
        for j in range(w):
            gx = (u[i, j + 1] - u[i, j] if j < w - 1 else 0.0) - n_fixed[i, j, 0]
            gy = (u[i + 1, j] - u[i, j] if i < h - 1 else 0.0) - n_fixed[i, j, 1]
            rho = np.sqrt(gx * gx + gy * gy + eps2)
            wc[i, j, 0] = gx / rho
            wc[i, j, 1] = gy / rho
    for i in range(h):
        for j in range(w):
            out[i, j] = (-beta * _div_cell(wc[..., 0], wc[..., 1], i, j, h, w)
                         + eta2 * (u[i, j] - f[i, j]))


@njit(cache=True)
def _joint_value(phi, u, f, grad_f, alpha, beta, eta1, eta2, eps):
    h, w = phi.shape
    # beta=0 makes the reused block contribute only the alpha and eta1 terms
    total = _sub1_value(phi, grad_f, grad_f, alpha, 0.0, eta1, eps)
    eps2 = eps * eps
    n = np.empty((h, w, 2))
    _grad2(phi, n)
    for i in range(h):
        for j in range(w):
            gx = (u[i, j + 1] - u[i, j] if j < w - 1 else 0.0) - n[i, j, 0]
            gy = (u[i + 1, j] - u[i, j] if i < h - 1 else 0.0) - n[i, j, 1]
            total += beta * np.sqrt(gx * gx + gy * gy + eps2)
            d = u[i, j] - f[i, j]
            total += 0.5 * eta2 * d * d
    return total


@njit(cache=True)
def _joint_grad(phi, u, f, grad_f, alpha, beta, eta1, eta2, eps, out_phi, out_u):
    h, w = phi.shape
    eps2 = eps * eps
    n = np.empty((h, w, 2))
    _grad2(phi, n)
    wj = np.empty((h, w, 4))
    for i in range(h):
        for j in range(w):
            jxx = n[i, j + 1, 0] - n[i, j, 0] if j < w - 1 else 0.0
            jxy = n[i + 1, j, 0] - n[i, j, 0] if i < h - 1 else 0.0
            jyx = n[i, j + 1, 1] - n[i, j, 1] if j < w - 1 else 0.0
            jyy = n[i + 1, j, 1] - n[i, j, 1] if i < h - 1 else 0.0
            rho = np.sqrt(jxx * jxx + jxy * jxy + jyx * jyx + jyy * jyy + eps2)
            wj[i, j, 0] = jxx / rho
            wj[i, j, 1] = jxy / rho
            wj[i, j, 2] = jyx / rho
            wj[i, j, 3] = jyy / rho
    wc = np.empty((h, w, 2))
    for i in range(h):
        for j in range(w):
            gx = (u[i, j + 1] - u[i, j] if j < w - 1 else 0.0) - n[i, j, 0]
            gy = (u[i + 1, j] - u[i, j] if i < h - 1 else 0.0) - n[i, j, 1]
            rho = np.sqrt(gx * gx + gy * gy + eps2)
            wc[i, j, 0] = gx / rho
            wc[i, j, 1] = gy / rho
    dn = np.empty((h, w, 2))
    for i in range(h):
        for j in range(w):
            dn[i, j, 0] = (-alpha * _div_cell(wj[..., 0], wj[..., 1], i, j, h, w)
                           - beta * wc[i, j, 0] + eta1 * (n[i, j, 0] - grad_f[i, j, 0]))
            dn[i, j, 1] = (-alpha * _div_cell(wj[..., 2], wj[..., 3], i, j, h, w)
                           - beta * wc[i, j, 1] + eta1 * (n[i, j, 1] - grad_f[i, j, 1]))
    for i in range(h):
        for j in range(w):
            out_phi[i, j] = -_div_cell(dn[..., 0], dn[..., 1], i, j, h, w)
            out_u[i, j] = (-beta * _div_cell(wc[..., 0], wc[..., 1], i, j, h, w)
                           + eta2 * (u[i, j] - f[i, j]))


@njit(cache=True)
def descend_sub1(phi0, grad_f, grad_u, alpha, beta, eta1, eps, max_steps, step_tol):
    """Backtracking gradient descent on the potential; returns
    (phi, objective, steps, grad_norm, converged)."""
    phi = phi0.copy()
    h, w = phi.shape
    g = np.empty((h, w))
    trial = np.empty((h, w))
    obj = _sub1_value(phi, grad_f, grad_u, alpha, beta, eta1, eps)
    t = 1.0
    steps = 0
    gnorm = 0.0
    converged = False
    for step in range(1, max_steps + 1):
        steps = step
        _sub1_grad(phi, grad_f, grad_u, alpha, beta, eta1, eps, g)
        gsq = 0.0
        for i in range(h):
            for j in range(w):
                gsq += g[i, j] * g[i, j]
        gnorm = np.sqrt(gsq)
        if gnorm <= step_tol:
            converged = True
            break
        accepted = False
        while t >= MIN_STEP:
            for i in range(h):
                for j in range(w):
                    trial[i, j] = phi[i, j] - t * g[i, j]
            tobj = _sub1_value(trial, grad_f, grad_u, alpha, beta, eta1, eps)
            if tobj <= obj - ARMIJO_C * t * gsq:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            break
        for i in range(h):
            for j in range(w):
                phi[i, j] = trial[i, j]
        obj = tobj
        t = min(t * EXPAND, MAX_STEP)
    return phi, obj, steps, gnorm, converged


@njit(cache=True)
def descend_sub2(u0, f, n_fixed, beta, eta2, eps, max_steps, step_tol):
    """Backtracking gradient descent on the image; same returns as descend_sub1."""
    u = u0.copy()
    h, w = u.shape
    g = np.empty((h, w))
    trial = np.empty((h, w))
    obj = _sub2_value(u, f, n_fixed, beta, eta2, eps)
    t = 1.0
    steps = 0
    gnorm = 0.0
    converged = False
    for step in range(1, max_steps + 1):
        steps = step
        _sub2_grad(u, f, n_fixed, beta, eta2, eps, g)
        gsq = 0.0
        for i in range(h):
            for j in range(w):
                gsq += g[i, j] * g[i, j]
        gnorm = np.sqrt(gsq)
        if gnorm <= step_tol:
            converged = True
            break
        accepted = False
        while t >= MIN_STEP:
            for i in range(h):
                for j in range(w):
                    trial[i, j] = u[i, j] - t * g[i, j]
            tobj = _sub2_value(trial, f, n_fixed, beta, eta2, eps)
            if tobj <= obj - ARMIJO_C * t * gsq:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            break
        for i in range(h):
            for j in range(w):
                u[i, j] = trial[i, j]
        obj = tobj
        t = min(t * EXPAND, MAX_STEP)
    return u, obj, steps, gnorm, converged


@njit(cache=True)
def descend_joint(phi0, u0, f, grad_f, alpha, beta, eta1, eta2, eps, max_steps, step_tol):
    """Backtracking gradient descent on (potential, image) jointly; returns
    (phi, u, objective, steps, grad_norm, converged)."""
    phi = phi0.copy()
    u = u0.copy()
    h, w = phi.shape
    g_phi = np.empty((h, w))
    g_u = np.empty((h, w))
    t_phi = np.empty((h, w))
    t_u = np.empty((h, w))
    obj = _joint_value(phi, u, f, grad_f, alpha, beta, eta1, eta2, eps)
    t = 1.0
    steps = 0
    gnorm = 0.0
    converged = False
    for step in range(1, max_steps + 1):
        steps = step
        _joint_grad(phi, u, f, grad_f, alpha, beta, eta1, eta2, eps, g_phi, g_u)
        gsq = 0.0
        for i in range(h):
            for j in range(w):
                gsq += g_phi[i, j] * g_phi[i, j] + g_u[i, j] * g_u[i, j]
        gnorm = np.sqrt(gsq)
        if gnorm <= step_tol:
            converged = True
            break
        accepted = False
        while t >= MIN_STEP:
            for i in range(h):
                for j in range(w):
                    t_phi[i, j] = phi[i, j] - t * g_phi[i, j]
                    t_u[i, j] = u[i, j] - t * g_u[i, j]
            tobj = _joint_value(t_phi, t_u, f, grad_f, alpha, beta, eta1, eta2, eps)
            if tobj <= obj - ARMIJO_C * t * gsq:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            break
        for i in range(h):
            for j in range(w):
                phi[i, j] = t_phi[i, j]
                u[i, j] = t_u[i, j]
        obj = tobj
        t = min(t * EXPAND, MAX_STEP)
    return phi, u, obj, steps, gnorm, converged
