"""Hypothesis checking and conclusion testing for the eigenvalue comparisons.

Each checker evaluates the pointwise curvature/drift hypotheses of one
comparison statement on a sample grid (analytic closures, never grid
differences of samples), runs the appropriate eigenvalue solvers on both
sides, and reports a verdict:  premises_hold, the margin of the asserted
eigenvalue inequality, and an equality-case flag.  Premise failure is a
reported outcome, not an exception.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import disk as disk_mod
from . import radial as radial_mod
from .bounds import solve_w_u
from .disk import (DiskProblem, PolarGrid, angular_std, assemble_operator,
                   divergence_field, drift_matrix, solve_principal, volumes,
                   weighted_stiffness)
from .errors import LogarithmicBranchError, SolverError
from .geometry import (ModelBall, extra_condition_lhs, extra_drift_profile,
                       radial_sectional_curvature)

PREMISE_TOL = 1e-9
SAMPLES_1D = 401


@dataclass(eq=False)
class AnalyticDisk:
    """2-D subject with analytically supplied metric coefficient and drift.

    Curvature and distance-Laplacian come from the closures (J, J_t, J_tt),
    not from grid samples; the discrete problem is built on demand.
    """

    r0: float
    J: Callable
    J_t: Callable
    J_tt: Callable
    h1: Callable | None = None
    h1_t: Callable | None = None
    vtheta: Callable | None = None
    m: int = 2

    def curvature(self, t, th):
        return -np.asarray(self.J_tt(t, th)) / np.asarray(self.J(t, th))

    def laplace_r(self, t, th):
        return (self.m - 1) * np.asarray(self.J_t(t, th)) / np.asarray(self.J(t, th))

    def build(self, n_t: int, n_theta: int) -> DiskProblem:
        grid = PolarGrid(n_t=n_t, n_theta=n_theta, r0=self.r0)
        T, TH = grid.mesh()
        J = np.asarray(self.J(T, TH), dtype=float) * np.ones_like(T)
        Vt = (np.asarray(self.h1(T, TH), dtype=float) * np.ones_like(T)
              if self.h1 is not None else np.zeros_like(T))
        Vth = (np.asarray(self.vtheta(T, TH), dtype=float) * np.ones_like(T)
               if self.vtheta is not None else np.zeros_like(T))
        return DiskProblem(grid=grid, J=J, Vt=Vt, Vtheta=Vth)


@dataclass(eq=False)
class ComparisonCase:
    subject: object  # ModelBall or AnalyticDisk
    model: ModelBall
    mode: str  # sectional | ricci | divergence | sandwich_prop61
    label: str = ""
    n_t_1d: int = radial_mod.DEFAULT_GRID
    grid_2d: tuple = (disk_mod.DEFAULT_NT, disk_mod.DEFAULT_NTHETA)


@dataclass(eq=False)
class ComparisonVerdict:
    label: str
    mode: str
    premises_hold: bool
    premise_margins: dict
    lambda_subject: float
    lambda_model: float
    margin: float
    conclusion_holds: bool
    equality_case: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label, "mode": self.mode,
            "premises_hold": self.premises_hold,
            "premise_margins": self.premise_margins,
            "lambda_subject": self.lambda_subject,
            "lambda_model": self.lambda_model,
            "margin": self.margin,
            "conclusion_holds": self.conclusion_holds,
            "equality_case": self.equality_case,
            "notes": self.notes,
        }

    def csv_row(self) -> str:
        return (f"{self.label},{self.premises_hold},{self.lambda_subject:.12g},"
                f"{self.lambda_model:.12g},{self.margin:.12g},{self.conclusion_holds}")


def verdicts_to_json(verdicts) -> str:
    return json.dumps([v.to_dict() for v in verdicts], sort_keys=True, indent=2) + "\n"


def verdicts_to_csv(verdicts) -> str:
    lines = ["case_id,premises,lambda_subject,lambda_model,margin,conclusion"]
    lines += [v.csv_row() for v in verdicts]
    return "\n".join(lines) + "\n"


# -- premise sampling --------------------------------------------------------

def _sample_grid(r0: float):
    return np.linspace(0.0, r0, SAMPLES_1D)


def _subject_curvature(subject, ts, thetas=None):
    if isinstance(subject, ModelBall):
        return radial_sectional_curvature(subject.rho, ts)
    T, TH = np.meshgrid(ts[1:], thetas, indexing="ij")
    vals = subject.curvature(T, TH)
    at0 = subject.curvature(np.full_like(thetas, 1e-8 * subject.r0), thetas)
    return np.vstack([at0[None, :], vals])


def _subject_drift(subject, ts, thetas=None):
    if isinstance(subject, ModelBall):
        return np.asarray(subject.drift.h(ts), dtype=float)
    if subject.h1 is None:
        return np.zeros((ts.size, thetas.size))
    T, TH = np.meshgrid(ts, thetas, indexing="ij")
    return np.asarray(subject.h1(T, TH), dtype=float) * np.ones_like(T)


def _subject_lambda(case: ComparisonCase, tol_1d=1e-10, tol_2d=1e-7):
    if isinstance(case.subject, ModelBall):
        mode = radial_mod.principal_eigenpair(case.subject, tol=1e-8, n_t=case.n_t_1d)
        return mode.lam, 1e-9, mode
    problem = case.subject.build(*case.grid_2d)
    pair, _ = solve_principal(problem, tol=tol_2d)
    dt, dth = problem.grid.dt, problem.grid.dtheta
    return pair.lam, 10.0 * pair.lam * (dt * dt + dth * dth * 0.05), pair


def _model_lambda(case: ComparisonCase):
    mode = radial_mod.principal_eigenpair(case.model, tol=1e-8, n_t=case.n_t_1d)
    return mode.lam, mode


def _bishop_ratio_slope(subject, model: ModelBall, ts, thetas):
    """Sign data for (J/rho)': (J' rho - J rho')/rho^2 on the sample grid."""
    rho, rho1, _ = model.rho.eval(ts[1:])
    if isinstance(subject, ModelBall):
        J, J1, _ = subject.rho.eval(ts[1:])
        return (J1 * rho - J * rho1) / rho ** 2
    T, TH = np.meshgrid(ts[1:], thetas, indexing="ij")
    J = np.asarray(subject.J(T, TH), dtype=float)
    J1 = np.asarray(subject.J_t(T, TH), dtype=float)
    return (J1 * rho[:, None] - J * rho1[:, None]) / rho[:, None] ** 2


def verify_sectional_comparison(case: ComparisonCase, tol: float | None = None) -> ComparisonVerdict:
    """Sectional-curvature comparison: smaller curvature and drift on the
    subject force a larger principal eigenvalue.

    Premises (pointwise): K_subject <= K_model and h1 <= h.  The monotone
    volume-ratio slope (J/rho)' >= 0 implied by the curvature premise is
    checked alongside.  Conclusion: lambda_subject >= lambda_model - tol.
    """
    subject, model = case.subject, case.model
    ts = _sample_grid(model.r0)
    thetas = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    K_s = _subject_curvature(subject, ts, thetas)
    K_m = radial_sectional_curvature(model.rho, ts)
    curv_margin = float(np.min(np.atleast_1d(K_m if np.ndim(K_s) == 1 else K_m[:, None]) - K_s))
    h_m = np.asarray(model.drift.h(ts), dtype=float)
    h_s = _subject_drift(subject, ts, thetas)
    drift_margin = float(np.min((h_m if h_s.ndim == 1 else h_m[:, None]) - h_s))
    bishop_min = float(np.min(_bishop_ratio_slope(subject, model, ts, thetas)))
    margins = {"curvature": curv_margin, "drift": drift_margin,
               "volume_ratio_slope": bishop_min}
    premises = curv_margin >= -PREMISE_TOL and drift_margin >= -PREMISE_TOL
    notes = []
    if premises and bishop_min < -PREMISE_TOL:
        notes.append("volume-ratio monotonicity violated despite curvature premise")
        premises = False

    lam_m, _ = _model_lambda(case)
    if not premises:
        return ComparisonVerdict(case.label, case.mode, False, margins,
                                 math.nan, lam_m, math.nan, False, False, notes)
    lam_s, allowance, _ = _subject_lambda(case)
    tol_eff = tol if tol is not None else 1e-9 + allowance
    margin = lam_s - lam_m
    conclusion = margin >= -tol_eff
    equality = (abs(margin) <= tol_eff
                and abs(curv_margin) <= math.sqrt(PREMISE_TOL)
                and abs(drift_margin) <= math.sqrt(PREMISE_TOL))
    return ComparisonVerdict(case.label, case.mode, True, margins, lam_s, lam_m,
                             margin, conclusion, equality, notes)


def _extra_profile_subject(subject, ts, thetas, fd_step):
    """div(V) - |V|^2/2 for the subject side, with the t=0 limit m h1'(0)."""
    if isinstance(subject, ModelBall):
        return np.asarray(extra_drift_profile(subject, ts), dtype=float)
    if subject.h1 is None:
        return np.zeros((ts.size, thetas.size))
    T, TH = np.meshgrid(ts[1:], thetas, indexing="ij")
    h1 = np.asarray(subject.h1(T, TH), dtype=float)
    h1t = np.asarray(subject.h1_t(T, TH), dtype=float)
    vals = extra_condition_lhs(h1, h1t, subject.laplace_r(T, TH))
    h1p0 = np.asarray(subject.h1(np.full_like(thetas, fd_step), thetas)) / fd_step
    at0 = subject.m * h1p0
    return np.vstack([at0[None, :], vals])


def verify_ricci_comparison(case: ComparisonCase, tol: float | None = None,
                            equality_tol: float = 1e-6) -> ComparisonVerdict:
    """Ricci-curvature comparison for radial drifts: larger radial Ricci and
    larger div(V) - |V|^2/2 on the subject force a smaller eigenvalue.

    On equality the eigenfunction transport relation
    omega_subject = omega_model * exp((H1 - H)/2) is verified by residual.
    """
    subject, model = case.subject, case.model
    ts = _sample_grid(model.r0)
    thetas = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    notes = []

    if isinstance(subject, AnalyticDisk) and subject.vtheta is not None:
        T, TH = np.meshgrid(ts[1:], thetas, indexing="ij")
        if np.any(np.asarray(subject.vtheta(T, TH)) != 0.0):
            raise ValueError("the Ricci comparison requires a radial subject drift")

    h_m = np.asarray(model.drift.h(ts), dtype=float)
    model_h_min = float(np.min(h_m))
    h_s = _subject_drift(subject, ts, thetas)
    if np.min(h_s) < -PREMISE_TOL:
        notes.append("subject drift changes sign: outside the statement's exercised range")

    K_s = _subject_curvature(subject, ts, thetas)
    K_m = radial_sectional_curvature(model.rho, ts)
    # Ricci(d/dt, d/dt) = (m-1) * radial curvature on both sides
    ricci_margin = float(np.min(K_s - (K_m if np.ndim(K_s) == 1 else K_m[:, None])))
    fd_step = (model.r0 / case.n_t_1d) / 10.0
    extra_m = np.asarray(extra_drift_profile(model, ts), dtype=float)
    extra_s = _extra_profile_subject(subject, ts, thetas, fd_step)
    extra_margin = float(np.min(extra_s - (extra_m if extra_s.ndim == 1 else extra_m[:, None])))
    bishop_max = float(np.max(_bishop_ratio_slope(subject, model, ts, thetas)))
    margins = {"ricci": ricci_margin, "extra_condition": extra_margin,
               "model_drift_sign": model_h_min, "volume_ratio_slope": -bishop_max}
    premises = (ricci_margin >= -PREMISE_TOL and extra_margin >= -PREMISE_TOL
                and model_h_min >= -PREMISE_TOL)
    if premises and bishop_max > PREMISE_TOL:
        notes.append("volume-ratio monotonicity violated despite Ricci premise")
        premises = False

    lam_m, mode_m = _model_lambda(case)
    if not premises:
        return ComparisonVerdict(case.label, case.mode, False, margins,
                                 math.nan, lam_m, math.nan, False, False, notes)
    lam_s, allowance, sol_s = _subject_lambda(case)
    tol_eff = tol if tol is not None else 1e-9 + allowance
    margin = lam_m - lam_s
    conclusion = margin >= -tol_eff
    equality = abs(margin) <= tol_eff and abs(extra_margin) <= math.sqrt(PREMISE_TOL)
    if equality and isinstance(subject, ModelBall):
        resid = _eigenfunction_transport_residual(subject, model, sol_s, mode_m)
        notes.append(f"transport residual {resid:.2e}")
        if resid > equality_tol:
            conclusion = False
            notes.append("eigenfunction transport relation failed")
    return ComparisonVerdict(case.label, case.mode, True, margins, lam_s, lam_m,
                             margin, conclusion, equality, notes)


def _eigenfunction_transport_residual(subject: ModelBall, model: ModelBall,
                                      mode_s, mode_m) -> float:
    """Sup distance between omega_subject and omega_model e^{(H1-H)/2}."""
    t = mode_m.t
    H1 = np.asarray(subject.drift.H(t), dtype=float)
    H = np.asarray(model.drift.H(t), dtype=float)
    cand = mode_m.a * np.exp(0.5 * (H1 - H))
    cand /= np.max(np.abs(cand))
    ref = mode_s.a / np.max(np.abs(mode_s.a))
    return float(np.max(np.abs(cand - ref)))


def verify_divergence_comparison(problem: DiskProblem, tol: float = 1e-6,
                   div_tol: float = 1e-9, solver_tol: float = 1e-7,
                   label: str = "cor-div") -> ComparisonVerdict:
    """Nonpositive drift divergence forces lambda*_0 <= lambda*_V.

    When div(V) vanishes identically and the drift is purely angular, the
    equality mechanism (radial ground mode unchanged) is checked too.
    """
    div = divergence_field(problem)
    div_max = float(np.max(div))
    margins = {"divergence": -div_max}
    premises = div_max <= div_tol
    notes = []
    pair0, _ = solve_principal(problem.with_drift(), tol=solver_tol)
    if not premises:
        return ComparisonVerdict(label, "divergence", False, margins,
                                 math.nan, pair0.lam, math.nan, False, False,
                                 ["positive divergence on the grid"])
    pairV, _ = solve_principal(problem, tol=solver_tol)
    margin = pairV.lam - pair0.lam
    conclusion = margin >= -tol
    equality = False
    if float(np.max(np.abs(div))) <= div_tol and np.all(problem.Vt == 0.0):
        equality = abs(margin) <= tol
        astd = angular_std(pairV.omega)
        notes.append(f"angular std of omega {astd:.2e}")
        if astd > 1e-6:
            notes.append("equality mechanism failed: omega not radial")
            conclusion = conclusion and False
    return ComparisonVerdict(label, "divergence", True, margins,
                             pairV.lam, pair0.lam, margin, conclusion,
                             equality, notes)


@dataclass(eq=False)
class SandwichResult:
    lower_gap: float
    upper_gap: float
    lam_zero: float
    lam_drift: float
    combined_tol: float

    def __iter__(self):
        # unpacks as the slack pair
        return iter((self.lower_gap, self.upper_gap))


def eigenvalue_sandwich(problem: DiskProblem, tol: float = 1e-7) -> SandwichResult:
    """Slacks of the drift/driftless eigenvalue sandwich.

    With L2-normalized ground modes omega_0 and omega_V,

        lambda_V + 1/2 int (div V - 2|grad w|^2) omega_0^2
            <= lambda_0 <= lambda_V + 1/2 int div(V) omega_V^2,

    where w minimizes Q_{omega_0}.  The divergence integrals are evaluated
    through the discrete integration-by-parts dual of the drift form, which
    makes the right-hand slack exactly nonnegative at matrix level; the
    left-hand slack is nonnegative up to O(h^2).
    """
    vol = volumes(problem)
    pair0, _ = solve_principal(problem.with_drift(), tol=tol)
    pairV, _ = solve_principal(problem, tol=tol)
    R = drift_matrix(problem)
    shape = problem.J.shape

    def normalized(pair):
        v = pair.omega.ravel()
        return v / math.sqrt(float((v * v * vol).sum()))

    w0 = normalized(pair0)
    wV = normalized(pairV)
    drift_pairing_V = float((vol * wV) @ (R @ wV))   # int omega_V g(V, grad omega_V)
    drift_pairing_0 = float((vol * w0) @ (R @ w0))
    int_div_V = -2.0 * drift_pairing_V
    int_div_0 = -2.0 * drift_pairing_0
    upper_gap = pairV.lam + 0.5 * int_div_V - pair0.lam

    w_pot, _ = solve_w_u(problem, np.abs(w0.reshape(shape)))
    Kw = weighted_stiffness(problem, (w0.reshape(shape)) ** 2, dirichlet=False)
    grad_int = float(w_pot.ravel() @ (Kw @ w_pot.ravel()))
    lower_gap = pair0.lam - pairV.lam - 0.5 * int_div_0 + grad_int

    dt, dth = problem.grid.dt, problem.grid.dtheta
    combined = pair0.residual + pairV.residual + 2.0 * pair0.lam * (dt * dt + dth * dth * 0.05)
    return SandwichResult(lower_gap=float(lower_gap), upper_gap=float(upper_gap),
                          lam_zero=pair0.lam, lam_drift=pairV.lam,
                          combined_tol=float(combined))


# -- eigenvalue derivative under gradient drift ------------------------------

def derivative_lambda_eps(base, f, eps: float, tol: float = 1e-3,
                          flat_tol: float = 1e-2, grid_2d=(160, 96)) -> float:
    """Central difference d/d eps of lambda under the drift eps * grad f.

    `base` is a drift-free ModelBall with f = (f, f', f'') radial callables,
    or a DiskProblem with f = (f, f_t, f_theta) closures.  The premise that
    the Laplacian of f is constant (= 2 c0) is verified first; the result
    must match -c0 within tol.
    """
    if isinstance(base, ModelBall):
        f0, f1, f2 = f
        ts = _sample_grid(base.r0)[1:]
        rho, rho1, _ = base.rho.eval(ts)
        lap = np.asarray(f2(ts), dtype=float) + (base.m - 1) * rho1 / rho * np.asarray(f1(ts), dtype=float)
        lap0 = base.m * float(f2(0.0))
        lap = np.concatenate([[lap0], lap])
        c0 = 0.5 * float(np.mean(lap))
        if np.max(np.abs(lap - 2.0 * c0)) > flat_tol * max(1.0, abs(2.0 * c0)):
            raise ValueError("f does not have a constant Laplacian on the ball")
        lams = []
        f_origin = float(f0(0.0))
        for sgn in (+1.0, -1.0):
            s = sgn * eps
            from .geometry import drift_from_callables
            drift = drift_from_callables(
                h=lambda t, s=s: s * np.asarray(f1(t), dtype=float),
                h_prime=lambda t, s=s: s * np.asarray(f2(t), dtype=float),
                H=lambda t, s=s: s * (np.asarray(f0(t), dtype=float) - f_origin))
            ball = ModelBall(m=base.m, r0=base.r0, rho=base.rho, drift=drift)
            lams.append(radial_mod.principal_eigenpair(ball, tol=1e-8).lam)
        est = (lams[0] - lams[1]) / (2.0 * eps)
    else:
        problem: DiskProblem = base
        f0, ft, fth = f
        T, TH = problem.grid.mesh()
        fs = np.asarray(f0(T, TH), dtype=float) * np.ones_like(T)
        A0 = assemble_operator(problem.with_drift())
        lap = -(A0 @ fs.ravel()).reshape(fs.shape)
        vol = volumes(problem).reshape(fs.shape)
        core = lap[1:-1, :]
        cvol = vol[1:-1, :]
        c0 = 0.5 * float((core * cvol).sum() / cvol.sum())
        rms = math.sqrt(float((((core - 2.0 * c0) ** 2) * cvol).sum() / cvol.sum()))
        if rms > flat_tol * max(1.0, abs(2.0 * c0)):
            raise ValueError("f does not have a constant Laplacian on the disk")
        Vt = np.asarray(ft(T, TH), dtype=float) * np.ones_like(T)
        Vth = np.asarray(fth(T, TH), dtype=float) * np.ones_like(T) / problem.J ** 2
        lams = []
        for sgn in (+1.0, -1.0):
            prob = DiskProblem(problem.grid, problem.J, sgn * eps * Vt, sgn * eps * Vth)
            pair, _ = solve_principal(prob, tol=1e-7)
            lams.append(pair.lam)
        est = (lams[0] - lams[1]) / (2.0 * eps)
    if abs(est + c0) > tol:
        raise SolverError(
            f"eigenvalue derivative {est:.6g} disagrees with -c0 = {-c0:.6g}"
        )
    return float(est)


# -- Riccati rigidity --------------------------------------------------------

@dataclass(eq=False)
class RiccatiResult:
    t: np.ndarray
    h_recovered: np.ndarray
    sup_error: float


def riccati_uniqueness(ball: ModelBall, tol: float = 1e-6, n_t: int = 1024,
                       u_prime0: float = 0.0) -> RiccatiResult:
    """Recover the drift from its own equality-case Riccati flow.

    The substitution h1 = -2 u'/u turns the Riccati equation into a linear
    second-order ODE with a regular singular point at t=0 whose indicial
    roots are 0 and 2-m; the bounded branch has u(0)=1, u'(0)=0.  A nonzero
    initial slope selects the excluded singular/logarithmic family, as does
    u crossing zero before r0; both raise LogarithmicBranchError.
    """
    if u_prime0 != 0.0:
        raise LogarithmicBranchError(
            "initial slope u'(0) != 0 lies in the excluded singular branch "
            "(indicial root 2-m / logarithmic solution); no bounded drift "
            "corresponds to it"
        )
    m, r0 = ball.m, ball.r0

    def g_fun(t):
        return 0.5 * np.asarray(extra_drift_profile(ball, t), dtype=float)

    def lap_r(t):
        rho, rho1, _ = ball.rho.eval(t)
        return (m - 1) * np.asarray(rho1) / np.asarray(rho)

    # quadratic fits of g and of w = t * rho'/rho near 0 feed the series start
    delta = r0 / 200.0
    pts = delta * np.arange(0.0, 4.0)
    g_vals = g_fun(pts)
    g2, g1, g0 = np.polyfit(pts, g_vals, 2)
    ptsw = delta * np.arange(0.0, 5.0)
    w_vals = np.empty_like(ptsw)
    w_vals[0] = 1.0
    rho, rho1, _ = ball.rho.eval(ptsw[1:])
    w_vals[1:] = ptsw[1:] * np.asarray(rho1) / np.asarray(rho)
    mu2, mu1, mu0 = np.polyfit(ptsw, -(m - 1) * w_vals, 2)

    u2 = -g0 / (2.0 - 2.0 * mu0)
    u3 = (2.0 * mu1 * u2 - g1) / (6.0 - 3.0 * mu0)
    u4 = (3.0 * mu1 * u3 + 2.0 * mu2 * u2 - g2 - g0 * u2) / (12.0 - 4.0 * mu0)

    nodes = np.linspace(0.0, r0, n_t + 1)
    dt_out = nodes[1]
    t = dt_out
    u = 1.0 + u2 * t * t + u3 * t ** 3 + u4 * t ** 4
    up = 2.0 * u2 * t + 3.0 * u3 * t * t + 4.0 * u4 * t ** 3
    u_nodes = np.empty(n_t + 1)
    up_nodes = np.empty(n_t + 1)
    u_nodes[0], up_nodes[0] = 1.0, 0.0
    u_nodes[1], up_nodes[1] = u, up

    c_stab = 1.0 / (m + 1.0)
    for j in range(1, n_t):
        target = nodes[j + 1]
        while t < target - 1e-14 * r0:
            s = min(c_stab * t, dt_out / 2.0, target - t)
            if target - (t + s) < 0.2 * s:
                s = target - t

            def f(tt, y1, y2):
                q1 = -lap_r(tt)
                return y2, q1 * y2 - g_fun(tt) * y1

            k1a, k1b = f(t, u, up)
            k2a, k2b = f(t + 0.5 * s, u + 0.5 * s * k1a, up + 0.5 * s * k1b)
            k3a, k3b = f(t + 0.5 * s, u + 0.5 * s * k2a, up + 0.5 * s * k2b)
            k4a, k4b = f(t + s, u + s * k3a, up + s * k3b)
            u += s * (k1a + 2 * k2a + 2 * k3a + k4a) / 6.0
            up += s * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0
            t += s
            if u <= 0.0:
                raise LogarithmicBranchError(
                    f"u crossed zero at t={t:.6g}: the recovered drift blows up "
                    "(logarithmic/singular branch)"
                )
        t = target
        u_nodes[j + 1], up_nodes[j + 1] = u, up

    h_rec = np.empty(n_t + 1)
    h_rec[0] = 0.0
    h_rec[1:] = -2.0 * up_nodes[1:] / u_nodes[1:]
    h_true = np.asarray(ball.drift.h(nodes), dtype=float)
    sup_err = float(np.max(np.abs(h_rec - h_true)))
    if sup_err > tol:
        raise SolverError(
            f"drift recovery error {sup_err:.3e} exceeds tol {tol:.1e}"
        )
    return RiccatiResult(t=nodes, h_recovered=h_rec, sup_error=sup_err)


def radial_ibp_check(problem: DiskProblem, u, phi, origin_tol: float = 1e-6) -> float:
    """Absolute defect of the radial integration-by-parts identity

        int phi du/dt dM = - int u (dphi/dt + phi * Lap r) dM

    for u vanishing on the wall and phi vanishing at the origin (checked by
    extrapolating the first two rings).  Probes the quadrature plus the
    distance-Laplacian stencils.
    """
    N, L = problem.grid.n_t, problem.grid.n_theta
    dt = problem.grid.dt
    u = np.asarray(u, dtype=float).reshape(problem.J.shape)
    phi = np.asarray(phi, dtype=float).reshape(problem.J.shape)
    phi_at0 = 1.5 * phi[0, :] - 0.5 * phi[1, :]
    scale = max(float(np.max(np.abs(phi))), 1e-300)
    if np.max(np.abs(phi_at0)) > origin_tol * scale:
        raise ValueError("phi must extrapolate to 0 at the origin")

    def d_dt(field, dirichlet):
        out = np.empty_like(field)
        out[1:-1, :] = (field[2:, :] - field[:-2, :]) / (2.0 * dt)
        ghost = np.roll(field[0, :], L // 2)
        out[0, :] = (field[1, :] - ghost) / (2.0 * dt)
        if dirichlet:
            out[-1, :] = (-field[-1, :] - field[-2, :]) / (2.0 * dt)
        else:
            out[-1, :] = (3.0 * field[-1, :] - 4.0 * field[-2, :] + field[-3, :]) / (2.0 * dt)
        return out

    du = d_dt(u, dirichlet=True)
    dphi = d_dt(phi, dirichlet=False)
    Jt = np.empty_like(problem.J)
    Jt[1:-1, :] = (problem.J[2:, :] - problem.J[:-2, :]) / (2.0 * dt)
    Jt[0, :] = (-3.0 * problem.J[0, :] + 4.0 * problem.J[1, :] - problem.J[2, :]) / (2.0 * dt)
    Jt[-1, :] = (3.0 * problem.J[-1, :] - 4.0 * problem.J[-2, :] + problem.J[-3, :]) / (2.0 * dt)
    lap_r = Jt / problem.J
    vol = volumes(problem).reshape(problem.J.shape)
    lhs = float((phi * du * vol).sum())
    rhs = -float((u * (dphi + phi * lap_r) * vol).sum())
    return abs(lhs - rhs)


def radial_divergence_profile(h1: np.ndarray, J: np.ndarray, t: np.ndarray, m: int):
    """(div V, (h1 J^{m-1})') sample pair for the monotonicity equivalence."""
    Jm = J ** (m - 1)
    prod = h1 * Jm
    dprod = np.gradient(prod, t)
    dh1 = np.gradient(h1, t)
    dJ = np.gradient(J, t)
    div = dh1 + (m - 1) * h1 * dJ / J
    return div, dprod


# -- corpus ------------------------------------------------------------------

def builtin_corpus() -> list:
    """Twelve model-vs-model cases spanning space-form and drift pairs."""
    from .geometry import polynomial_drift, space_form_ball, zero_drift

    def ball(kappa, m, drift=None):
        return space_form_ball(kappa, m, 1.0, drift)

    t1 = polynomial_drift([1.0])        # h = t
    t_half = polynomial_drift([0.5])    # h = t/2
    t2 = polynomial_drift([0.0, 1.0])   # h = t^2
    two_t = polynomial_drift([2.0])     # h = 2t

    cases = [
        ComparisonCase(ball(0.0, 2), ball(1.0, 2), "sectional", "flat<=sphere m2"),
        ComparisonCase(ball(-1.0, 2), ball(0.0, 2), "sectional", "hyp<=flat m2"),
        ComparisonCase(ball(-1.0, 3), ball(1.0, 3), "sectional", "hyp<=sphere m3"),
        ComparisonCase(ball(0.0, 2, t_half), ball(0.0, 2, t1), "sectional",
                       "flat drift t/2<=t"),
        ComparisonCase(ball(-1.0, 3), ball(0.0, 3, t2), "sectional",
                       "hyp zero-drift <= flat t^2"),
        ComparisonCase(ball(0.0, 2, t1), ball(1.0, 2, t1), "sectional",
                       "flat<=sphere drift t"),
        ComparisonCase(ball(1.0, 2), ball(0.0, 2), "ricci", "sphere>=flat m2"),
        ComparisonCase(ball(0.0, 2), ball(-1.0, 2), "ricci", "flat>=hyp m2"),
        ComparisonCase(ball(1.0, 3), ball(-1.0, 3), "ricci", "sphere>=hyp m3"),
        ComparisonCase(ball(0.0, 2, t1), ball(0.0, 2, t_half), "ricci",
                       "flat drift t>=t/2"),
        ComparisonCase(ball(0.0, 2, two_t), ball(-1.0, 2, t1), "ricci",
                       "flat 2t >= hyp t"),
        ComparisonCase(ball(1.0, 2, t1), ball(1.0, 2, t1), "ricci",
                       "identical pair (equality)"),
    ]
    return cases


def run_case(case: ComparisonCase, tol: float | None = None) -> ComparisonVerdict:
    if case.mode == "sectional":
        return verify_sectional_comparison(case, tol=tol)
    if case.mode == "ricci":
        return verify_ricci_comparison(case, tol=tol)
    raise ValueError(f"unknown comparison mode {case.mode!r}")


def run_corpus(cases=None, tol: float | None = None) -> list:
    cases = builtin_corpus() if cases is None else cases
    return [run_case(c, tol=tol) for c in cases]
