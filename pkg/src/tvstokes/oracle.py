"""Independent brute-force checks for tiny problem instances.

oracle_minimize runs plain gradient descent with Armijo backtracking on an
epsilon-smoothed objective (sqrt(|v|^2 + eps^2) in place of |v|), entirely
in the primal variables.  The curl-free constraint on the gradient block is
made exact by optimising a scalar potential and taking its gradient, so the
oracle shares no machinery with the dual solvers it is used to certify.

adjointness_suite measures the operator identities the dual solvers rely on
(adjoint pairs, projector idempotency / self-adjointness / fixed points) on
seeded random fields and reports the worst relative violation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _oracle_kernels as _kernels
from .diff_ops import div, div_tensor, grad, jacobian
from .fields import cell_magnitude, inner, norm_l2, sum_pointwise_euclid
from .projector import PoissonPlan, project
from .solvers import Params

MAX_ORACLE_SIZE = 8

OBJECTIVE_KINDS = ("sub1", "sub2", "joint")


@dataclass(frozen=True)
class SmoothedProblem:
    """A tiny instance of one block objective (or the joint one), smoothed.

    kind selects the objective; f is the observed image.  sub1 needs the
    frozen image u_fixed, sub2 the frozen gradient field n_fixed.  epsilon
    is the smoothing width, capped so its objective offset (at most
    epsilon per cell) stays inside the comparison tolerances.
    """

    kind: str
    params: Params
    f: np.ndarray
    u_fixed: np.ndarray | None = None
    n_fixed: np.ndarray | None = None
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}")
        if not 0.0 < self.epsilon <= 1e-6:
            raise ValueError("epsilon must lie in (0, 1e-6] for oracle runs")
        if self.kind == "sub1" and self.u_fixed is None:
            raise ValueError("sub1 objective needs u_fixed")
        if self.kind == "sub2" and self.n_fixed is None:
            raise ValueError("sub2 objective needs n_fixed")


@dataclass
class OracleResult:
    """Minimiser and objective values; converged=False flags an exhausted budget."""

    n: np.ndarray | None
    u: np.ndarray | None
    objective: float
    smoothed_objective: float
    converged: bool
    steps: int
    grad_norm: float


def _smoothed_tv(v: np.ndarray, eps: float) -> float:
    return float(np.sum(np.sqrt(cell_magnitude(v) ** 2 + eps * eps)))


def _tv_weight(v: np.ndarray, eps: float) -> np.ndarray:
    """Per-cell v / sqrt(|v|^2 + eps^2), the smoothed-TV derivative."""
    rho = np.sqrt(cell_magnitude(v) ** 2 + eps * eps)
    return v / rho[..., None]


def _split(x: np.ndarray, shape: tuple[int, int], blocks: int) -> list[np.ndarray]:
    cells = shape[0] * shape[1]
    return [x[i * cells:(i + 1) * cells].reshape(shape) for i in range(blocks)]


def _problem_functions(prob: SmoothedProblem):
    """Return (value, gradient, unpack) closures over a flat variable vector."""
    par = prob.params
    eps = prob.epsilon
    f = prob.f
    shape = f.shape
    grad_f = grad(f)

    if prob.kind == "sub1":
        grad_u = grad(prob.u_fixed)

        def value(x):
            n = grad(_split(x, shape, 1)[0])
            return (par.alpha * _smoothed_tv(jacobian(n), eps)
                    + 0.5 * par.eta1 * norm_l2(n - grad_f) ** 2
                    + par.beta * _smoothed_tv(n - grad_u, eps))

        def gradient(x):
            n = grad(_split(x, shape, 1)[0])
            dn = (-par.alpha * div_tensor(_tv_weight(jacobian(n), eps))
                  + par.eta1 * (n - grad_f)
                  + par.beta * _tv_weight(n - grad_u, eps))
            return -div(dn).ravel()

        def unpack(x):
            return grad(_split(x, shape, 1)[0]), None

        x0 = f.ravel().copy()
        return value, gradient, unpack, x0

    if prob.kind == "sub2":
        n_fixed = prob.n_fixed

        def value(x):
            u = _split(x, shape, 1)[0]
            return (par.beta * _smoothed_tv(grad(u) - n_fixed, eps)
                    + 0.5 * par.eta2 * norm_l2(u - f) ** 2)

        def gradient(x):
            u = _split(x, shape, 1)[0]
            return (-par.beta * div(_tv_weight(grad(u) - n_fixed, eps))
                    + par.eta2 * (u - f)).ravel()

        def unpack(x):
            return None, _split(x, shape, 1)[0]

        x0 = f.ravel().copy()
        return value, gradient, unpack, x0

    def value(x):
        phi, u = _split(x, shape, 2)
        n = grad(phi)
        return (par.alpha * _smoothed_tv(jacobian(n), eps)
                + par.beta * _smoothed_tv(grad(u) - n, eps)
                + 0.5 * par.eta1 * norm_l2(n - grad_f) ** 2
                + 0.5 * par.eta2 * norm_l2(u - f) ** 2)

    def gradient(x):
        phi, u = _split(x, shape, 2)
        n = grad(phi)
        couple = _tv_weight(grad(u) - n, eps)
        dn = (-par.alpha * div_tensor(_tv_weight(jacobian(n), eps))
              - par.beta * couple
              + par.eta1 * (n - grad_f))
        dphi = -div(dn)
        du = -par.beta * div(couple) + par.eta2 * (u - f)
        return np.concatenate([dphi.ravel(), du.ravel()])

    def unpack(x):
        phi, u = _split(x, shape, 2)
        return grad(phi), u

    x0 = np.concatenate([f.ravel(), f.ravel()])
    return value, gradient, unpack, x0


def _plain_objective(prob: SmoothedProblem, n: np.ndarray | None, u: np.ndarray | None) -> float:
    par = prob.params
    grad_f = grad(prob.f)
    if prob.kind == "sub1":
        return (par.alpha * sum_pointwise_euclid(jacobian(n))
                + 0.5 * par.eta1 * norm_l2(n - grad_f) ** 2
                + par.beta * sum_pointwise_euclid(n - grad(prob.u_fixed)))
    if prob.kind == "sub2":
        return (par.beta * sum_pointwise_euclid(grad(u) - prob.n_fixed)
                + 0.5 * par.eta2 * norm_l2(u - prob.f) ** 2)
    return (par.alpha * sum_pointwise_euclid(jacobian(n))
            + par.beta * sum_pointwise_euclid(grad(u) - n)
            + 0.5 * par.eta1 * norm_l2(n - grad_f) ** 2
            + 0.5 * par.eta2 * norm_l2(u - prob.f) ** 2)


def oracle_minimize(prob: SmoothedProblem, max_steps: int = 200_000,
                    step_tol: float = 1e-8) -> OracleResult:
    """Gradient descent with backtracking line search on the smoothed objective.

    Stops when the gradient norm reaches step_tol; exhausting max_steps (or
    stalling below the smallest representable step) flags the result instead
    of raising.  Instances larger than 8x8 are refused; the oracle exists to
    certify desk-scale cases, not to scale.  The descent itself runs in the
    jitted kernels: smoothed kink cells carry curvature around alpha/epsilon,
    so tight runs take millions of steps.
    """
    h, w = prob.f.shape
    if h > MAX_ORACLE_SIZE or w > MAX_ORACLE_SIZE:
        raise ValueError(f"oracle instances are capped at {MAX_ORACLE_SIZE}x{MAX_ORACLE_SIZE}, got {h}x{w}")
    par = prob.params
    f = np.ascontiguousarray(prob.f, dtype=np.float64)
    grad_f = grad(f)
    if prob.kind == "sub1":
        phi, obj, steps, gnorm, converged = _kernels.descend_sub1(
            f, grad_f, grad(prob.u_fixed), par.alpha, par.beta, par.eta1,
            prob.epsilon, max_steps, step_tol)
        n, u = grad(phi), None
    elif prob.kind == "sub2":
        u, obj, steps, gnorm, converged = _kernels.descend_sub2(
            f, f, np.ascontiguousarray(prob.n_fixed, dtype=np.float64),
            par.beta, par.eta2, prob.epsilon, max_steps, step_tol)
        n = None
    else:
        phi, u, obj, steps, gnorm, converged = _kernels.descend_joint(
            f, f, f, grad_f, par.alpha, par.beta, par.eta1, par.eta2,
            prob.epsilon, max_steps, step_tol)
        n = grad(phi)
    return OracleResult(n=n, u=u, objective=_plain_objective(prob, n, u),
                        smoothed_objective=float(obj), converged=bool(converged),
                        steps=int(steps), grad_norm=float(gnorm))


@dataclass
class AdjointnessReport:
    """Worst relative violations of the operator identities, per check."""

    shape: tuple[int, int]
    trials: int
    seed: int
    violations: dict[str, float]

    @property
    def max_violation(self) -> float:
        return max(self.violations.values())

    def to_text(self) -> str:
        lines = [f"operator identity suite on {self.shape[0]}x{self.shape[1]}, "
                 f"{self.trials} trials, seed {self.seed}"]
        lines += [f"  {name}: {value:.6e}" for name, value in sorted(self.violations.items())]
        lines.append(f"  max: {self.max_violation:.6e}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        header = "check,max_violation"
        rows = [f"{name},{value:.17g}" for name, value in sorted(self.violations.items())]
        return "\n".join([header] + rows) + "\n"


def _rel(num: float, scale: float) -> float:
    return num / max(scale, 1e-300)


def adjointness_suite(shape: tuple[int, int], trials: int, seed: int) -> AdjointnessReport:
    """Measure the identities the dual formulation rests on, over seeded trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    h, w = shape
    plan = PoissonPlan(h, w)
    worst = {
        "grad_div_adjoint": 0.0,
        "jacobian_div_tensor_adjoint": 0.0,
        "projector_idempotent": 0.0,
        "projector_self_adjoint": 0.0,
        "projector_fixed_point": 0.0,
    }
    for trial in range(trials):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))
        u = rng.standard_normal((h, w))
        p = rng.standard_normal((h, w, 2))
        n = rng.standard_normal((h, w, 2))
        big = rng.standard_normal((h, w, 4))
        a = rng.standard_normal((h, w, 2))
        b = rng.standard_normal((h, w, 2))

        gu = grad(u)
        dp = div(p)
        v = abs(inner(gu, p) + inner(u, dp))
        worst["grad_div_adjoint"] = max(worst["grad_div_adjoint"],
                                        _rel(v, norm_l2(gu) * norm_l2(p) + norm_l2(u) * norm_l2(dp)))

        jn = jacobian(n)
        dt = div_tensor(big)
        v = abs(inner(jn, big) + inner(n, dt))
        worst["jacobian_div_tensor_adjoint"] = max(worst["jacobian_div_tensor_adjoint"],
                                                   _rel(v, norm_l2(jn) * norm_l2(big) + norm_l2(n) * norm_l2(dt)))

        pn = project(plan, n)
        worst["projector_idempotent"] = max(worst["projector_idempotent"],
                                            _rel(norm_l2(project(plan, pn) - pn), norm_l2(n)))

        v = abs(inner(project(plan, a), b) - inner(a, project(plan, b)))
        worst["projector_self_adjoint"] = max(worst["projector_self_adjoint"],
                                              _rel(v, norm_l2(a) * norm_l2(b)))

        worst["projector_fixed_point"] = max(worst["projector_fixed_point"],
                                             _rel(norm_l2(project(plan, gu) - gu), norm_l2(gu)))
    return AdjointnessReport(shape=(h, w), trials=trials, seed=seed, violations=worst)
