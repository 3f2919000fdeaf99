"""Computable two-sided and variational bounds on the principal eigenvalue.

Three devices, all evaluated against the same discrete operator so the
bound statements hold at matrix level:

* the pointwise bracket inf <= lambda* <= sup of (-Delta_V u)/u over
  positive trials (the one-cell ring next to the Dirichlet wall is left
  out of the extremal scan and that exclusion is reported),
* the weighted Rayleigh quotient for gradient drifts,
* the integral min-max functional L(u,u) - inf_v Q_u(v) with its two
  auxiliary degenerate elliptic solves (the potential w_u and the steady
  density G), which collapses to a closed form for radial drifts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .disk import (DiskProblem, advection_matrix, assemble_operator, drift_load,
                   volumes, weighted_stiffness)
from .errors import ConvergenceError, IrreducibilityError, SolverError
from .geometry import ModelBall, weight_p
from .quadrature import cumulative_trapezoid_from_origin

GAUGE_BALL_FRACTION = 0.25
CONE_QUARTER = 0.75
CONE_RATIO_LIMIT = 1e6


@dataclass(eq=False)
class BartaBracket:
    """Two-sided pointwise bound; the true discrete eigenvalue lies inside."""

    lower: float
    upper: float
    argmin_point: tuple
    argmax_point: tuple
    excluded_rings: int

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper,
                "argmin_point": list(self.argmin_point),
                "argmax_point": list(self.argmax_point),
                "excluded_boundary_rings": self.excluded_rings}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> str:
        return f"{self.lower:.12g},{self.upper:.12g},{self.excluded_rings}"


@dataclass(eq=False)
class HollandReport:
    """Value of the integral min-max functional at one trial."""

    L_value: float
    Q_min: float
    bound: float
    w_u: np.ndarray
    G: np.ndarray | None = None
    fast_path: bool = False

    def to_dict(self) -> dict:
        return {"L": self.L_value, "Q_min": self.Q_min, "bound": self.bound,
                "fast_path": self.fast_path}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> str:
        return f"{self.L_value:.12g},{self.Q_min:.12g},{self.bound:.12g}"


def barta_bracket(op_eval, u, exclude_rings: int = 1) -> BartaBracket:
    """inf and sup of (-Delta_V u)/u over interior cells of a positive trial.

    `op_eval` maps trial samples to (-Delta_V u) samples (typically the
    assembled matrix action).  The `exclude_rings` outermost rings are
    dropped from the extremal scan to suppress the one-sided boundary
    stencil; the exclusion is part of the result.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("Barta trials must be strictly positive on the interior")
    ratio = np.asarray(op_eval(u), dtype=float) / u
    core = ratio[:-exclude_rings, :] if exclude_rings > 0 else ratio
    imin = np.unravel_index(np.argmin(core), core.shape)
    imax = np.unravel_index(np.argmax(core), core.shape)
    return BartaBracket(lower=float(core[imin]), upper=float(core[imax]),
                        argmin_point=tuple(int(x) for x in imin),
                        argmax_point=tuple(int(x) for x in imax),
                        excluded_rings=exclude_rings)


# -- weighted Rayleigh quotient --------------------------------------------

def _ball_forms(ball: ModelBall, f, n_t: int):
    """Stiffness/mass pair of the weighted radial quotient on [0, r0].

    Nodes i=0..n_t with the Dirichlet node n_t eliminated; the origin has a
    natural condition because the weight vanishes there.
    """
    r0 = ball.r0
    nodes = np.linspace(0.0, r0, n_t + 1)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    dx = nodes[1] - nodes[0]
    fm = np.asarray(f(mids), dtype=float)
    fn = np.asarray(f(nodes), dtype=float)
    w_mid = weight_p(ball, mids) * np.exp(-fm)
    w_node = weight_p(ball, nodes) * np.exp(-fn)
    n = n_t  # unknowns 0..n_t-1
    main = np.zeros(n)
    main[:] = w_mid[:n] / dx
    main[1:] += w_mid[: n - 1] / dx
    off = -w_mid[: n - 1] / dx
    K = sp.diags([off, main, off], offsets=(-1, 0, 1), format="csc")
    mass = w_node[:n] * dx
    mass[0] *= 0.5
    return K, mass, nodes


def rayleigh_quotient(target, f, u) -> float:
    """Weighted Dirichlet quotient of a trial with zero boundary trace.

    Ball trials are node samples on the uniform grid over [0, r0] with the
    last sample at the boundary, where they must vanish.
    """
    if isinstance(target, ModelBall):
        u = np.asarray(u, dtype=float)
        if abs(u[-1]) > 1e-10 * np.max(np.abs(u)):
            raise ValueError("ball trials must vanish at the boundary node")
        K, mass, _ = _ball_forms(target, f, u.shape[0] - 1)
        inner = u[:-1]
        denom = float(inner @ (mass * inner))
        if denom <= 0.0:
            raise ValueError("trial has zero weighted norm")
        return float(inner @ (K @ inner)) / denom
    problem: DiskProblem = target
    w = np.exp(-_field_on_grid(problem, f))
    K = weighted_stiffness(problem, w, dirichlet=True)
    mass = w.ravel() * volumes(problem)
    uv = np.asarray(u, dtype=float).ravel()
    denom = float(uv @ (mass * uv))
    if denom <= 0.0:
        raise ValueError("trial has zero weighted norm")
    return float(uv @ (K @ uv)) / denom


def rayleigh_gradient(target, f, u=None) -> float:
    """Weighted Rayleigh value for a gradient drift: quotient of the given
    trial, or the discrete minimum when no trial is supplied."""
    if u is not None:
        return rayleigh_quotient(target, f, u)
    return rayleigh_minimize(target, f)[0]


def rayleigh_minimize(target, f, n_t: int = 512, tol: float = 1e-12,
                      maxiter: int = 400):
    """Discrete minimum of the weighted quotient by inverse power iteration.

    Returns (lambda_f, minimizer samples).  The minimizer is normalized to
    max 1; for a ball the samples live on the uniform node grid including
    both endpoints.
    """
    if isinstance(target, ModelBall):
        K, mass, nodes = _ball_forms(target, f, n_t)
        lu = splu(K)
        v = np.ones(n_t)
        lam_old = np.inf
        for _ in range(maxiter):
            v = lu.solve(mass * v)
            v /= np.max(np.abs(v))
            lam = float(v @ (K @ v)) / float(v @ (mass * v))
            if abs(lam - lam_old) < tol * max(1.0, abs(lam)):
                break
            lam_old = lam
        else:
            raise ConvergenceError("Rayleigh minimization stalled (ball)")
        full = np.concatenate([v, [0.0]])
        return lam, full / np.max(np.abs(full))
    problem: DiskProblem = target
    w = np.exp(-_field_on_grid(problem, f))
    K = weighted_stiffness(problem, w, dirichlet=True).tocsc()
    mass = w.ravel() * volumes(problem)
    lu = splu(K)
    v = np.ones(problem.grid.size)
    lam_old = np.inf
    for _ in range(maxiter):
        v = lu.solve(mass * v)
        v /= np.max(np.abs(v))
        lam = float(v @ (K @ v)) / float(v @ (mass * v))
        if abs(lam - lam_old) < tol * max(1.0, abs(lam)):
            break
        lam_old = lam
    else:
        raise ConvergenceError("Rayleigh minimization stalled (disk)")
    shape = (problem.grid.n_t, problem.grid.n_theta)
    return lam, v.reshape(shape)


def _field_on_grid(problem: DiskProblem, f) -> np.ndarray:
    if callable(f):
        T, TH = problem.grid.mesh()
        return np.asarray(f(T, TH), dtype=float) * np.ones_like(T)
    arr = np.asarray(f, dtype=float)
    if arr.shape != problem.J.shape:
        raise ValueError("field samples must match the grid")
    return arr


# -- auxiliary degenerate elliptic solves -----------------------------------

def _gauge_vector(problem: DiskProblem) -> np.ndarray:
    T, _ = problem.grid.mesh()
    mask = (T < GAUGE_BALL_FRACTION * problem.grid.r0).ravel()
    vol = volumes(problem)
    gauge = np.where(mask, vol, 0.0)
    return gauge / gauge.sum()


def _bordered_solve(A: sp.spmatrix, constraint: np.ndarray, rhs: np.ndarray,
                    rhs_constraint: float):
    n = A.shape[0]
    c = sp.csc_matrix(constraint.reshape(n, 1))
    B = sp.bmat([[A, c], [c.T, None]], format="csc")
    full_rhs = np.concatenate([rhs, [rhs_constraint]])
    try:
        sol = splu(B).solve(full_rhs)
    except RuntimeError as exc:
        raise SolverError(f"degenerate elliptic solve failed: {exc}") from exc
    return sol[:n], float(sol[n])


def solve_w_u(problem: DiskProblem, u, tol: float = 1e-8):
    """Minimizer of Q_u(v) = int u^2 (|grad v|^2 - g(V, grad v)) dM.

    Solves the flux-form Euler-Lagrange system div(u^2 (2 grad w - V)) = 0
    with natural walls; the additive constant is fixed by zero mean over
    the interior ball t < r0/4.  Returns (w, relative residual).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("weight u must be positive on the interior")
    W = (u * u).reshape(problem.J.shape)
    K = weighted_stiffness(problem, W, dirichlet=False)
    b = drift_load(problem, W)
    gauge = _gauge_vector(problem)
    w, _ = _bordered_solve(2.0 * K, gauge, b, 0.0)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    residual = float(np.max(np.abs(2.0 * K @ w - b))) / scale
    if residual > max(tol, 1e-6):
        raise SolverError(f"potential solve residual {residual:.2e} too large")
    return w.reshape(problem.J.shape), residual


def q_functional(problem: DiskProblem, u, v) -> float:
    """Q_u(v) = int u^2 (|grad v|^2 - g(V, grad v)) dM on the grid."""
    u = np.asarray(u, dtype=float)
    W = (u * u).reshape(problem.J.shape)
    K = weighted_stiffness(problem, W, dirichlet=False)
    b = drift_load(problem, W)
    vv = np.asarray(v, dtype=float).ravel()
    return float(vv @ (K @ vv) - b @ vv)


def solve_G_V(problem: DiskProblem, omega, tol: float = 1e-8):
    """Positive steady density G solving div(omega^2 (grad G + G V)) = 0.

    Normalized to volume mean one.  A nonpositive solution means the
    discrete chain lost irreducibility (grid or drift pathology).
    Returns (G, residual).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0):
        raise ValueError("omega must be positive on the interior")
    W = (omega * omega).reshape(problem.J.shape)
    A = weighted_stiffness(problem, W, dirichlet=False) + advection_matrix(problem, W)
    vol = volumes(problem)
    m_vec = vol / vol.sum()
    G, _ = _bordered_solve(A.tocsc(), m_vec, np.zeros(problem.grid.size), 1.0)
    scale = float(np.max(np.abs(A.data))) * float(np.max(np.abs(G)))
    residual = float(np.max(np.abs(A @ G))) / max(scale, 1e-300)
    if np.any(G <= 0.0):
        raise IrreducibilityError(
            f"steady density has nonpositive entries (min {G.min():.3e})"
        )
    return G.reshape(problem.J.shape), residual


def _cone_check(problem: DiskProblem, u: np.ndarray):
    if np.any(u <= 0.0):
        raise ValueError("trial must be positive on the interior")
    T, _ = problem.grid.mesh()
    outer = T >= CONE_QUARTER * problem.grid.r0
    ratio = u[outer] / (problem.grid.r0 - T[outer])
    if np.min(ratio) <= 0.0 or np.max(ratio) / np.min(ratio) > CONE_RATIO_LIMIT:
        raise ValueError(
            "trial violates the boundary-decay cone: u/(r0-t) must stay "
            "within fixed positive bounds on the outer quarter"
        )


def l_form(problem: DiskProblem, u, A: sp.spmatrix | None = None) -> float:
    """L(u,u) = int (|grad u|^2 + u g(V, grad u)) dM via the operator pairing."""
    if A is None:
        A = assemble_operator(problem)
    uv = np.asarray(u, dtype=float).ravel()
    vol = volumes(problem)
    return float((vol * uv) @ (A @ uv))


def holland_bound(problem: DiskProblem, u, tol: float = 1e-8,
                  A: sp.spmatrix | None = None) -> HollandReport:
    """One-sided variational bound L(u,u) - inf_v Q_u(v) >= lambda*.

    Trials are validated against the discrete boundary-decay cone and
    L2-normalized internally.  When the drift has no angular component the
    infimum has the closed form -1/4 int u^2 Vt^2 dM with potential
    1/2 int_0^t Vt, and the elliptic solve is skipped.
    """
    u = np.asarray(u, dtype=float).reshape(problem.J.shape)
    _cone_check(problem, u)
    vol = volumes(problem)
    nrm = float(np.sqrt((u.ravel() ** 2 * vol).sum()))
    un = u / nrm
    L_val = l_form(problem, un, A=A)
    if np.all(problem.Vtheta == 0.0):
        q_min = float(-(0.25 * (un ** 2) * problem.Vt ** 2 * problem.J).sum()
                      * problem.grid.dt * problem.grid.dtheta)
        radii = problem.grid.radii()
        w = 0.5 * np.column_stack([
            cumulative_trapezoid_from_origin(problem.Vt[:, l], radii)
            for l in range(problem.grid.n_theta)
        ])
        return HollandReport(L_value=L_val, Q_min=q_min, bound=L_val - q_min,
                             w_u=w, fast_path=True)
    w, _ = solve_w_u(problem, un, tol=tol)
    q_min = q_functional(problem, un, w)
    return HollandReport(L_value=L_val, Q_min=q_min, bound=L_val - q_min,
                         w_u=w, fast_path=False)
