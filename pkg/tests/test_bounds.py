import math

import numpy as np
import pytest

from driftspectra.bounds import (barta_bracket, holland_bound, q_functional,
                                 rayleigh_minimize, rayleigh_quotient, solve_G_V,
                                 solve_w_u)
from driftspectra.disk import (build_model_disk, operator_action, solve_principal,
                               volumes)
from driftspectra.geometry import euclidean_ball, polynomial_drift, space_form_ball
from driftspectra.radial import principal_eigenpair

from _oracles import bessel_zero

FLAT = euclidean_ball(2, 1.0)
GRAD = euclidean_ball(2, 1.0, polynomial_drift([1.0]))  # V = grad(t^2/2)


@pytest.fixture(scope="module")
def flat_pair():
    problem = build_model_disk(FLAT, n_t=128, n_theta=64)
    pair, A = solve_principal(problem, tol=1e-8)
    return problem, pair, A


@pytest.fixture(scope="module")
def grad_pair():
    problem = build_model_disk(GRAD, n_t=128, n_theta=64)
    pair, A = solve_principal(problem, tol=1e-8)
    return problem, pair, A


class TestBarta:
    def test_equality_case_at_ground_mode(self, flat_pair):
        problem, pair, A = flat_pair
        br = barta_bracket(operator_action(A, problem.J.shape), pair.omega)
        assert br.lower <= pair.lam <= br.upper
        assert br.upper - br.lower < 10.0 * pair.residual
        assert br.excluded_rings == 1

    def test_paraboloid_trial(self, flat_pair):
        problem, pair, A = flat_pair
        T, _ = problem.grid.mesh()
        br = barta_bracket(operator_action(A, problem.J.shape), 1.0 - T ** 2)
        # -Delta u / u = 4/(1-t^2): the lower end sits at the innermost ring
        assert br.lower == pytest.approx(4.0, abs=1e-3)
        assert br.lower <= pair.lam <= br.upper

    def test_containment_for_random_trials(self, flat_pair):
        problem, pair, A = flat_pair
        act = operator_action(A, problem.J.shape)
        T, TH = problem.grid.mesh()
        rng = np.random.default_rng(11)
        for _ in range(10):
            c1, c2, c3 = rng.uniform(-0.3, 0.3, size=3)
            bump = 1.0 + c1 * np.sin(TH) * T + c2 * np.cos(2 * TH) * T ** 2 + c3 * T ** 2
            u = (1.0 - T ** 2) * np.maximum(bump, 0.2)
            br = barta_bracket(act, u)
            assert br.lower <= pair.lam <= br.upper

    def test_nonpositive_trial_rejected(self, flat_pair):
        problem, _, A = flat_pair
        T, _ = problem.grid.mesh()
        with pytest.raises(ValueError):
            barta_bracket(operator_action(A, problem.J.shape), 0.5 - T)

    def test_curved_model_trial_gives_lower_bound(self, flat_pair):
        # ground mode of the more curved model, transplanted radially onto
        # the flat disk, bounds the flat eigenvalue from below
        problem, pair, A = flat_pair
        model = principal_eigenpair(space_form_ball(1.0, 2, 1.0))
        T, _ = problem.grid.mesh()
        u = np.interp(T, model.t, model.a)
        br = barta_bracket(operator_action(A, problem.J.shape), u)
        assert br.lower >= model.lam - 1e-3
        assert br.lower <= pair.lam <= br.upper

    def test_serialization(self, flat_pair):
        problem, pair, A = flat_pair
        br = barta_bracket(operator_action(A, problem.J.shape), pair.omega)
        d = br.to_dict()
        assert set(d) == {"lower", "upper", "argmin_point", "argmax_point",
                          "excluded_boundary_rings"}
        assert "lower" in br.to_json()


class TestRayleigh:
    def test_flat_disk_minimum(self, flat_pair):
        problem, pair, _ = flat_pair
        lam, u = rayleigh_minimize(problem, lambda t, th: np.zeros_like(t))
        assert lam == pytest.approx(bessel_zero(0, 1) ** 2, abs=2e-3)
        # the discrete minimum and the operator ground value coincide
        assert lam == pytest.approx(pair.lam, abs=1e-8)
        assert rayleigh_quotient(problem, lambda t, th: np.zeros_like(t), u) \
            == pytest.approx(lam, rel=1e-12)

    def test_quotient_above_minimum(self, flat_pair):
        problem, _, _ = flat_pair
        T, _ = problem.grid.mesh()
        f0 = lambda t, th: np.zeros_like(t)
        lam, _ = rayleigh_minimize(problem, f0)
        assert rayleigh_quotient(problem, f0, 1.0 - T ** 2) >= lam - 1e-12

    def test_ball_path_matches_shooting(self):
        ball = euclidean_ball(3, 1.0)
        f = lambda t: 0.5 * np.asarray(t) ** 2
        lam_ray, u = rayleigh_minimize(ball, f, n_t=512)
        lam_sl = principal_eigenpair(euclidean_ball(3, 1.0, polynomial_drift([1.0]))).lam
        assert lam_ray == pytest.approx(lam_sl, abs=1e-4)
        # the minimizer round-trips through the quotient
        assert rayleigh_quotient(ball, f, u) == pytest.approx(lam_ray, rel=1e-12)

    def test_zero_trial_rejected(self, flat_pair):
        problem, _, _ = flat_pair
        with pytest.raises(ValueError):
            rayleigh_quotient(problem, lambda t, th: np.zeros_like(t),
                              np.zeros_like(problem.J))


class TestPotentialSolve:
    def test_zero_drift_gives_zero(self, flat_pair):
        problem, pair, _ = flat_pair
        w, resid = solve_w_u(problem, pair.omega)
        assert np.max(np.abs(w)) < 1e-10
        assert resid < 1e-10

    def test_gradient_drift_gives_half_potential(self, grad_pair):
        problem, pair, _ = grad_pair
        w, _ = solve_w_u(problem, pair.omega)
        T, _ = problem.grid.mesh()
        mask = T < 0.25
        target = T ** 2 / 4.0
        diff = (w - w[mask].mean()) - (target - target[mask].mean())
        assert np.max(np.abs(diff)) < 1e-4

    def test_gauge_invariance(self, grad_pair):
        # the form and load both annihilate constants; only roundoff scaled
        # by the stiffness entries survives a constant shift
        problem, pair, _ = grad_pair
        w, _ = solve_w_u(problem, pair.omega)
        q1 = q_functional(problem, pair.omega, w)
        q2 = q_functional(problem, pair.omega, w + 3.7)
        assert q2 == pytest.approx(q1, abs=1e-8)

    def test_minimum_value_identities(self, grad_pair):
        # Q(w) = -int u^2 |grad w|^2 and, for radial drift, -1/4 int u^2 h1^2
        problem, pair, _ = grad_pair
        u = pair.omega / math.sqrt(float((pair.omega.ravel() ** 2 * volumes(problem)).sum()))
        w, _ = solve_w_u(problem, u)
        q_min = q_functional(problem, u, w)
        assert q_min <= 0.0
        closed = -0.25 * float(((u * problem.Vt) ** 2 * problem.J).sum()) \
            * problem.grid.dt * problem.grid.dtheta
        assert q_min == pytest.approx(closed, rel=1e-3)

    def test_constant_test_function_annihilated(self, grad_pair):
        problem, pair, _ = grad_pair
        assert q_functional(problem, pair.omega, np.full_like(pair.omega, 2.5)) \
            == pytest.approx(0.0, abs=1e-12)


class TestSteadyDensity:
    def test_zero_drift_gives_one(self, flat_pair):
        problem, pair, _ = flat_pair
        G, resid = solve_G_V(problem, pair.omega)
        assert np.max(np.abs(G - 1.0)) < 1e-10
        assert resid < 1e-10

    def test_gradient_drift_gives_boltzmann(self, grad_pair):
        problem, pair, _ = grad_pair
        G, _ = solve_G_V(problem, pair.omega)
        T, _ = problem.grid.mesh()
        vol = volumes(problem).reshape(problem.J.shape)
        target = np.exp(-T ** 2 / 2.0)
        target *= vol.sum() / (target * vol).sum()
        assert np.max(np.abs(G - target)) < 1e-4

    def test_potential_density_link(self, grad_pair):
        # -2 w at the optimal trial equals log G up to the shared gauge
        problem, pair, _ = grad_pair
        G, _ = solve_G_V(problem, pair.omega)
        u_opt = pair.omega * np.sqrt(G)
        w, _ = solve_w_u(problem, u_opt)
        T, _ = problem.grid.mesh()
        mask = T < 0.25
        lhs = -2.0 * (w - w[mask].mean())
        rhs = np.log(G) - np.log(G)[mask].mean()
        assert np.max(np.abs(lhs - rhs)) < 5e-4

    def test_positive_everywhere(self, grad_pair):
        problem, pair, _ = grad_pair
        G, _ = solve_G_V(problem, pair.omega)
        assert np.min(G) > 0.0


class TestIntegralBound:
    def test_zero_drift_reduces_to_rayleigh(self, flat_pair):
        problem, pair, A = flat_pair
        T, _ = problem.grid.mesh()
        u = 1.0 - T ** 2
        rep = holland_bound(problem, u, A=A)
        quot = rayleigh_quotient(problem, lambda t, th: np.zeros_like(t), u)
        assert rep.Q_min == pytest.approx(0.0, abs=1e-14)
        assert rep.bound == pytest.approx(quot, rel=1e-10)
        assert rep.bound >= pair.lam - 1e-9

    def test_optimal_trial_attains_eigenvalue(self, grad_pair):
        problem, pair, A = grad_pair
        G, _ = solve_G_V(problem, pair.omega)
        rep = holland_bound(problem, pair.omega * np.sqrt(G), A=A)
        assert rep.bound == pytest.approx(pair.lam, abs=1e-3)

    def test_fast_path_matches_elliptic_path(self, grad_pair):
        # radial drift: closed-form infimum vs the actual minimization
        problem, pair, A = grad_pair
        u = pair.omega
        rep_fast = holland_bound(problem, u, A=A)
        assert rep_fast.fast_path
        vol = volumes(problem)
        un = (u / math.sqrt(float((u.ravel() ** 2 * vol).sum())))
        w, _ = solve_w_u(problem, un)
        q_true = q_functional(problem, un, w)
        assert rep_fast.Q_min == pytest.approx(q_true, rel=1e-3)

    def test_bound_dominates_eigenvalue(self, grad_pair):
        problem, pair, A = grad_pair
        T, TH = problem.grid.mesh()
        rng = np.random.default_rng(3)
        for _ in range(5):
            c = rng.uniform(-0.25, 0.25, size=2)
            u = (1.0 - T ** 2) * (1.0 + c[0] * T * np.sin(TH) + c[1] * T ** 2)
            rep = holland_bound(problem, np.maximum(u, 1e-3 * (1 - T ** 2)), A=A)
            assert rep.bound >= pair.lam - 1e-6

    def test_q_min_nonpositive(self, grad_pair):
        problem, pair, A = grad_pair
        rep = holland_bound(problem, pair.omega, A=A)
        assert rep.Q_min <= 0.0

    def test_report_serialization(self, grad_pair):
        problem, pair, A = grad_pair
        rep = holland_bound(problem, pair.omega, A=A)
        assert set(rep.to_dict()) == {"L", "Q_min", "bound", "fast_path"}
        assert len(rep.csv_row().split(",")) == 3


def test_completing_the_square_inequality():
    # -|X|^2 - <V,X> <= <X,Z> + |V+Z|^2/4 with equality iff Z = -2X - V
    rng = np.random.default_rng(42)
    X = rng.normal(size=(10000, 2))
    V = rng.normal(size=(10000, 2))
    Z = rng.normal(size=(10000, 2))
    lhs = -(X * X).sum(1) - (V * X).sum(1)
    rhs = (X * Z).sum(1) + 0.25 * ((V + Z) ** 2).sum(1)
    assert np.all(lhs <= rhs + 1e-12)
    Zstar = -2.0 * X - V
    rhs_star = (X * Zstar).sum(1) + 0.25 * ((V + Zstar) ** 2).sum(1)
    assert np.max(np.abs(lhs - rhs_star)) < 1e-12
