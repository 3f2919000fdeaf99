"""Drift Laplacian on 2-D geodesic disks with metric dt^2 + J^2 dtheta^2.

The diffusion part is discretized in conservative flux form on a
cell-centered polar grid (no node at the origin): radial fluxes use face
averages of J, the inner face at t=0 carries zero flux because J vanishes
there, and the Dirichlet condition at t=r0 enters through an antisymmetric
ghost value.  First derivatives for the drift use centered differences;
the ghost behind the first ring is the antipodal cell (t0, theta+pi).

The principal pair of the nonsymmetric operator is computed by shifted
inverse power iteration on a sparse LU factorization; left (adjoint) and
right vectors are iterated together, which gives a two-sided eigenvalue
estimate accurate to the square of the residual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, NonPrincipalModeError, SolverError
from .geometry import ModelBall

DEFAULT_NT = 192
DEFAULT_NTHETA = 128
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class PolarGrid:
    """Cell-centered polar grid: radii (j+1/2) dt, angles 2 pi l / n_theta."""

    n_t: int
    n_theta: int
    r0: float

    def __post_init__(self):
        if self.n_t < 4 or self.n_theta < 8:
            raise ValueError("grid too coarse: need n_t >= 4 and n_theta >= 8")
        if self.n_theta % 2 != 0:
            raise ValueError("n_theta must be even (antipodal ghost across the origin)")
        if self.r0 <= 0:
            raise ValueError("radius must be positive")

    @property
    def dt(self) -> float:
        return self.r0 / self.n_t

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    def radii(self) -> np.ndarray:
        return (np.arange(self.n_t) + 0.5) * self.dt

    def angles(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    def mesh(self):
        return np.meshgrid(self.radii(), self.angles(), indexing="ij")

    @property
    def size(self) -> int:
        return self.n_t * self.n_theta


@dataclass(eq=False)
class DiskProblem:
    """Metric coefficient and drift components sampled at cell centers.

    The vector field is V = Vt * d/dt + Vtheta * d/dtheta, so its pairing
    with a gradient is Vt u_t + Vtheta u_theta and the radial component
    h1 = g(V, d/dt) equals Vt.
    """

    grid: PolarGrid
    J: np.ndarray
    Vt: np.ndarray
    Vtheta: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n_t, self.grid.n_theta)
        self.J = np.asarray(self.J, dtype=float)
        self.Vt = np.asarray(self.Vt, dtype=float)
        self.Vtheta = np.asarray(self.Vtheta, dtype=float)
        for name, arr in (("J", self.J), ("Vt", self.Vt), ("Vtheta", self.Vtheta)):
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
        if np.any(self.J <= 0.0):
            raise ValueError("metric coefficient J must be positive everywhere")
        ring0 = self.J[0, :] / self.grid.radii()[0]
        if np.any(np.abs(ring0 - 1.0) > 0.05):
            raise ValueError(
                "J does not behave like t near the origin (first ring off by more than 5%)"
            )

    def with_drift(self, Vt=None, Vtheta=None) -> "DiskProblem":
        zero = np.zeros_like(self.J)
        return DiskProblem(self.grid, self.J,
                           zero if Vt is None else Vt,
                           zero if Vtheta is None else Vtheta)


@dataclass(eq=False)
class EigenPair2D:
    lam: float
    omega: np.ndarray
    residual: float
    iterations: int
    restarts: int = 0

    def summary(self, grid: PolarGrid | None = None) -> dict:
        out = {"lambda": self.lam, "residual": self.residual,
               "iterations": self.iterations}
        if grid is not None:
            out["grid"] = {"n_t": grid.n_t, "n_theta": grid.n_theta, "r0": grid.r0}
        return out


def volumes(p: DiskProblem) -> np.ndarray:
    return (p.J * p.grid.dt * p.grid.dtheta).ravel()


def _indices(p: DiskProblem) -> np.ndarray:
    return np.arange(p.grid.size).reshape(p.grid.n_t, p.grid.n_theta)


def _outer_face_value(field: np.ndarray) -> np.ndarray:
    """Linear extrapolation of a cell field to the boundary face."""
    val = 1.5 * field[-1, :] - 0.5 * field[-2, :]
    return np.maximum(val, 0.5 * np.minimum(field[-1, :], field[-2, :]))


def weighted_stiffness(p: DiskProblem, cellweight=None, dirichlet: bool = True) -> sp.csr_matrix:
    """Symmetric form matrix of int W |grad u|^2 dM on cell values.

    With `dirichlet` the outer boundary face contributes the half-cell term
    from u=0 on the face; without it the form has natural (no-flux) walls,
    annihilates constants and is only positive semidefinite.
    """
    N, L = p.grid.n_t, p.grid.n_theta
    dt, dth = p.grid.dt, p.grid.dtheta
    W = np.ones_like(p.J) if cellweight is None else np.asarray(cellweight, dtype=float)
    idx = _indices(p)
    rows, cols, vals = [], [], []

    WJ = W * p.J
    w_rad = 0.5 * (WJ[:-1, :] + WJ[1:, :]) * dth / dt
    a = idx[:-1, :].ravel()
    b = idx[1:, :].ravel()
    wv = w_rad.ravel()
    rows += [a, b, a, b]
    cols += [a, b, b, a]
    vals += [wv, wv, -wv, -wv]

    WoJ = W / p.J
    w_ang = 0.5 * (WoJ + np.roll(WoJ, -1, axis=1)) * dt / dth
    a = idx.ravel()
    b = np.roll(idx, -1, axis=1).ravel()
    wv = w_ang.ravel()
    rows += [a, b, a, b]
    cols += [a, b, b, a]
    vals += [wv, wv, -wv, -wv]

    if dirichlet:
        wb = 2.0 * _outer_face_value(WJ) * dth / dt
        a = idx[-1, :]
        rows.append(a)
        cols.append(a)
        vals.append(wb)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    K = sp.coo_matrix((vals, (rows, cols)), shape=(p.grid.size, p.grid.size))
    return K.tocsr()


def drift_load(p: DiskProblem, cellweight) -> np.ndarray:
    """Linear functional phi -> int W g(V, grad phi) dM on cell values.

    Assembled from the same interior faces as the weighted stiffness, so it
    annihilates constants exactly.  Boundary faces carry no term: the weight
    vanishes at the Dirichlet wall and J vanishes at the origin.
    """
    N, L = p.grid.n_t, p.grid.n_theta
    dt, dth = p.grid.dt, p.grid.dtheta
    W = np.asarray(cellweight, dtype=float)
    idx = _indices(p)
    b_vec = np.zeros(p.grid.size)

    Qr = W * p.Vt * p.J
    c = 0.5 * (Qr[:-1, :] + Qr[1:, :]) * dth
    np.add.at(b_vec, idx[1:, :].ravel(), c.ravel())
    np.add.at(b_vec, idx[:-1, :].ravel(), -c.ravel())

    Qa = W * p.Vtheta * p.J
    c = 0.5 * (Qa + np.roll(Qa, -1, axis=1)) * dt
    np.add.at(b_vec, np.roll(idx, -1, axis=1).ravel(), c.ravel())
    np.add.at(b_vec, idx.ravel(), -c.ravel())
    return b_vec


def advection_matrix(p: DiskProblem, cellweight) -> sp.csr_matrix:
    """Matrix of (G, phi) -> int G W g(V, grad phi) dM with face-averaged G."""
    N, L = p.grid.n_t, p.grid.n_theta
    dt, dth = p.grid.dt, p.grid.dtheta
    W = np.asarray(cellweight, dtype=float)
    idx = _indices(p)
    rows, cols, vals = [], [], []

    Qr = W * p.Vt * p.J
    a = idx[:-1, :].ravel()
    b = idx[1:, :].ravel()
    qa = 0.5 * Qr[:-1, :].ravel() * dth
    qb = 0.5 * Qr[1:, :].ravel() * dth
    rows += [b, b, a, a]
    cols += [a, b, a, b]
    vals += [qa, qb, -qa, -qb]

    Qt = W * p.Vtheta * p.J
    a = idx.ravel()
    b = np.roll(idx, -1, axis=1).ravel()
    qa = 0.5 * Qt.ravel() * dt
    qb = 0.5 * np.roll(Qt, -1, axis=1).ravel() * dt
    rows += [b, b, a, a]
    cols += [a, b, a, b]
    vals += [qa, qb, -qa, -qb]

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.coo_matrix((vals, (rows, cols)), shape=(p.grid.size, p.grid.size)).tocsr()


def drift_matrix(p: DiskProblem, upwind: bool = False) -> sp.csr_matrix:
    """Pointwise drift action u -> Vt u_t + Vtheta u_theta.

    Centered differences by default; ghosts are the antipodal cell behind
    the first ring and the Dirichlet-antisymmetric value past the last ring.
    The upwind flag switches to first-order one-sided differences for
    drift-dominated stress tests.
    """
    N, L = p.grid.n_t, p.grid.n_theta
    dt, dth = p.grid.dt, p.grid.dtheta
    idx = _indices(p)
    antip = np.roll(idx[0, :], L // 2)
    rows, cols, vals = [], [], []

    if not upwind:
        cr = p.Vt / (2.0 * dt)
        # interior rings
        a = idx[1:-1, :].ravel()
        rows += [a, a]
        cols += [idx[2:, :].ravel(), idx[:-2, :].ravel()]
        vals += [cr[1:-1, :].ravel(), -cr[1:-1, :].ravel()]
        # first ring: backward neighbor is the antipodal cell
        a = idx[0, :]
        rows += [a, a]
        cols += [idx[1, :], antip]
        vals += [cr[0, :], -cr[0, :]]
        # last ring: ghost u_N = -u_{N-1}
        a = idx[-1, :]
        rows += [a, a]
        cols += [idx[-1, :], idx[-2, :]]
        vals += [-cr[-1, :], -cr[-1, :]]

        ca = p.Vtheta / (2.0 * dth)
        a = idx.ravel()
        rows += [a, a]
        cols += [np.roll(idx, -1, axis=1).ravel(), np.roll(idx, 1, axis=1).ravel()]
        vals += [ca.ravel(), -ca.ravel()]
    else:
        pos = p.Vt >= 0.0
        cr = p.Vt / dt
        for j in range(N):
            a = idx[j, :]
            back = antip if j == 0 else idx[j - 1, :]
            if j == N - 1:
                fwd_col, fwd_sign = idx[j, :], -1.0
            else:
                fwd_col, fwd_sign = idx[j + 1, :], 1.0
            up = np.where(pos[j, :], cr[j, :], 0.0)
            dn = np.where(~pos[j, :], cr[j, :], 0.0)
            rows += [a, a, a, a]
            cols += [a, back, fwd_col, a]
            vals += [up, -up, fwd_sign * dn, -dn]
        posa = p.Vtheta >= 0.0
        ca = p.Vtheta / dth
        a = idx.ravel()
        upv = np.where(posa, ca, 0.0).ravel()
        dnv = np.where(~posa, ca, 0.0).ravel()
        rows += [a, a, a, a]
        cols += [a, np.roll(idx, 1, axis=1).ravel(),
                 np.roll(idx, -1, axis=1).ravel(), a]
        vals += [upv, -upv, dnv, -dnv]

    rows = np.concatenate([np.asarray(r).ravel() for r in rows])
    cols = np.concatenate([np.asarray(c).ravel() for c in cols])
    vals = np.concatenate([np.asarray(v).ravel() for v in vals])
    return sp.coo_matrix((vals, (rows, cols)), shape=(p.grid.size, p.grid.size)).tocsr()


def assemble_operator(p: DiskProblem, upwind: bool = False) -> sp.csr_matrix:
    """Matrix of -Delta_V = -Delta_0 + (drift action) with Dirichlet wall."""
    K = weighted_stiffness(p, None, dirichlet=True)
    inv_vol = 1.0 / volumes(p)
    A = sp.diags(inv_vol) @ K + drift_matrix(p, upwind=upwind)
    return A.tocsr()


def operator_action(A: sp.spmatrix, shape):
    def act(u):
        return (A @ np.asarray(u, dtype=float).ravel()).reshape(shape)

    return act


def principal_eigenpair_2d(op: sp.spmatrix, shift_guess: float = 0.0,
                           tol: float = DEFAULT_TOL, maxiter: int = 400,
                           shape=None) -> EigenPair2D:
    """Positive ground pair by shifted inverse power iteration.

    Left and right vectors are advanced with the same LU factorization
    (transposed solves), and the reported eigenvalue is the two-sided
    quotient y^T A x / y^T x, accurate to O(residual^2).
    """
    n = op.shape[0]
    A = op.tocsc()
    try:
        lu = splu(A - shift_guess * sp.identity(n, format="csc"))
    except RuntimeError as exc:
        raise SolverError(f"factorization failed (shift {shift_guess}): {exc}") from exc
    v = np.ones(n)
    y = np.ones(n)
    restarts = 0
    lam = shift_guess
    residual = np.inf
    best = np.inf
    stalled = 0
    for it in range(1, maxiter + 1):
        v = lu.solve(v)
        y = lu.solve(y, trans="T")
        vmax = np.max(np.abs(v))
        if vmax == 0.0 or not np.isfinite(vmax):
            raise SolverError("inverse iteration broke down")
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        if y[np.argmax(np.abs(y))] < 0:
            y = -y
        v /= np.max(np.abs(v))
        y /= np.max(np.abs(y))
        if np.any(v <= 0.0):
            restarts += 1
            if restarts > 25:
                raise NonPrincipalModeError(
                    "iterates keep leaving the positive cone; "
                    f"shift {shift_guess} may exceed the principal eigenvalue "
                    "or the grid is too coarse"
                )
            v = np.abs(v)
            y = np.abs(y)
        Av = op @ v
        denom = float(y @ v)
        if denom <= 0.0:
            restarts += 1
            y = np.abs(y)
            denom = float(y @ v)
        lam = float(y @ Av) / denom
        residual = float(np.max(np.abs(Av - lam * v)))
        if residual < tol and it >= 3:
            break
        if residual < 0.95 * best:
            best = residual
            stalled = 0
        else:
            stalled += 1
            if stalled >= 12:
                if restarts > 3:
                    raise NonPrincipalModeError(
                        "iteration keeps leaving the positive cone without "
                        f"converging (shift {shift_guess} above the principal "
                        "eigenvalue, or grid too coarse)"
                    )
                # roundoff floor of the triangular solves
                raise ConvergenceError(
                    f"residual stagnated at {residual:.2e} above tol={tol:.1e} "
                    f"(roundoff floor); iteration {it}"
                )
    else:
        raise ConvergenceError(
            f"inverse iteration did not reach tol={tol:.1e} in {maxiter} iterations "
            f"(residual {residual:.2e})"
        )
    if np.any(v <= 0.0):
        raise NonPrincipalModeError("converged mode has nonpositive components")
    if lam <= 0.0:
        raise SolverError(f"principal eigenvalue came out nonpositive: {lam}")
    omega = v.reshape(shape) if shape is not None else v
    return EigenPair2D(lam=lam, omega=omega, residual=residual,
                       iterations=it, restarts=restarts)


def adjoint_principal(op: sp.spmatrix, tol: float = DEFAULT_TOL,
                      shape=None) -> EigenPair2D:
    """Principal pair of the transposed operator; spectra must coincide."""
    fwd = principal_eigenpair_2d(op, 0.0, tol=tol, shape=None)
    adj = principal_eigenpair_2d(op.T.tocsr(), 0.0, tol=tol, shape=shape)
    if abs(fwd.lam - adj.lam) > 1e-10 * max(1.0, abs(fwd.lam)):
        raise SolverError(
            f"transpose spectrum mismatch: {fwd.lam!r} vs {adj.lam!r}"
        )
    return adj


def solve_principal(problem: DiskProblem, tol: float = DEFAULT_TOL,
                    upwind: bool = False):
    """Assemble the operator and return (eigenpair, matrix)."""
    A = assemble_operator(problem, upwind=upwind)
    pair = principal_eigenpair_2d(A, 0.0, tol=tol,
                                  shape=(problem.grid.n_t, problem.grid.n_theta))
    return pair, A


def build_model_disk(ball: ModelBall, perturbation=None, drift_angular=None,
                     vt_override=None, n_t: int = DEFAULT_NT,
                     n_theta: int = DEFAULT_NTHETA) -> DiskProblem:
    """Disk problem J = rho (1 + perturbation), Vt = h (or override).

    Only m=2 balls discretize to a polar disk; the perturbation must keep
    J positive and J ~ t near the origin.
    """
    if ball.m != 2:
        raise ValueError("disk problems require a 2-dimensional ball")
    grid = PolarGrid(n_t=n_t, n_theta=n_theta, r0=ball.r0)
    T, TH = grid.mesh()
    rho = np.asarray(ball.rho.eval(T)[0], dtype=float)
    J = rho if perturbation is None else rho * (1.0 + np.asarray(perturbation(T, TH), dtype=float))
    if vt_override is not None:
        Vt = np.asarray(vt_override(T, TH), dtype=float) * np.ones_like(J)
    else:
        Vt = np.asarray(ball.drift.h(T), dtype=float) * np.ones_like(J)
    if drift_angular is not None:
        Vth = np.asarray(drift_angular(T, TH), dtype=float) * np.ones_like(J)
    else:
        Vth = np.zeros_like(J)
    return DiskProblem(grid=grid, J=J, Vt=Vt, Vtheta=Vth)


def divergence_field(p: DiskProblem) -> np.ndarray:
    """div(V) = d_t Vt + Vt d_t(log J) + (1/J) d_theta(J Vtheta) on the grid.

    The product J*Vt is kinked through the origin even for smooth fields
    (J ~ |s| along a diameter), so the two factors are differenced
    separately: Vt gets the sign-flipped antipodal ghost behind the first
    ring (the radial unit vector reverses through the origin), J is
    differenced one-sidedly there; the last ring is one-sided second order.
    """
    N, L = p.grid.n_t, p.grid.n_theta
    dt, dth = p.grid.dt, p.grid.dtheta

    dVt = np.empty_like(p.Vt)
    dVt[1:-1, :] = (p.Vt[2:, :] - p.Vt[:-2, :]) / (2.0 * dt)
    ghost = -np.roll(p.Vt[0, :], L // 2)
    dVt[0, :] = (p.Vt[1, :] - ghost) / (2.0 * dt)
    dVt[-1, :] = (3.0 * p.Vt[-1, :] - 4.0 * p.Vt[-2, :] + p.Vt[-3, :]) / (2.0 * dt)

    dJ = np.empty_like(p.J)
    dJ[1:-1, :] = (p.J[2:, :] - p.J[:-2, :]) / (2.0 * dt)
    dJ[0, :] = (-3.0 * p.J[0, :] + 4.0 * p.J[1, :] - p.J[2, :]) / (2.0 * dt)
    dJ[-1, :] = (3.0 * p.J[-1, :] - 4.0 * p.J[-2, :] + p.J[-3, :]) / (2.0 * dt)

    G = p.J * p.Vtheta
    dG = (np.roll(G, -1, axis=1) - np.roll(G, 1, axis=1)) / (2.0 * dth)
    return dVt + p.Vt * dJ / p.J + dG / p.J


def angular_std(omega: np.ndarray) -> float:
    """Largest per-ring angular standard deviation, relative to the peak."""
    return float(np.max(np.std(omega, axis=1)) / np.max(np.abs(omega)))


def eigenpair_csv(p: DiskProblem, pair: EigenPair2D) -> str:
    T, TH = p.grid.mesh()
    lines = ["t,theta,omega"]
    for tj, th, om in zip(T.ravel(), TH.ravel(), pair.omega.ravel()):
        lines.append(f"{tj:.12g},{th:.12g},{om:.12g}")
    return "\n".join(lines) + "\n"


def eigenpair_json(p: DiskProblem, pair: EigenPair2D) -> str:
    return json.dumps(pair.summary(p.grid), sort_keys=True, indent=2) + "\n"
