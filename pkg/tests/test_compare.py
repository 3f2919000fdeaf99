import math

import numpy as np
import pytest

from driftspectra.compare import (AnalyticDisk, ComparisonCase, builtin_corpus,
                                  derivative_lambda_eps, eigenvalue_sandwich,
                                  radial_divergence_profile, radial_ibp_check,
                                  riccati_uniqueness, run_case, verdicts_to_csv,
                                  verdicts_to_json, verify_divergence_comparison, verify_sectional_comparison,
                                  verify_ricci_comparison)
from driftspectra.disk import build_model_disk
from driftspectra.errors import LogarithmicBranchError
from driftspectra.geometry import euclidean_ball, polynomial_drift, space_form_ball

FLAT = euclidean_ball(2, 1.0)


class TestSectionalComparison:
    def test_flat_versus_sphere(self):
        case = ComparisonCase(space_form_ball(0.0, 2, 1.0), space_form_ball(1.0, 2, 1.0),
                              "sectional", "flat-vs-sphere")
        v = verify_sectional_comparison(case)
        assert v.premises_hold and v.conclusion_holds
        assert v.lambda_subject > v.lambda_model
        assert not v.equality_case

    def test_premise_failure_is_reported_not_raised(self):
        # subject more curved than the model: hypothesis fails, no assertion
        case = ComparisonCase(space_form_ball(1.0, 2, 1.0), space_form_ball(0.0, 2, 1.0),
                              "sectional", "backwards")
        v = verify_sectional_comparison(case)
        assert not v.premises_hold
        assert math.isnan(v.lambda_subject)

    def test_identical_pair_is_equality_case(self):
        ball = space_form_ball(-1.0, 2, 1.0, polynomial_drift([0.5]))
        v = verify_sectional_comparison(ComparisonCase(ball, ball, "sectional", "same"))
        assert v.premises_hold and v.conclusion_holds and v.equality_case

    def test_disk_subject_against_curved_model(self):
        flat_disk = AnalyticDisk(
            r0=1.0,
            J=lambda t, th: t * np.ones_like(th * 1.0),
            J_t=lambda t, th: np.ones_like(t * th),
            J_tt=lambda t, th: np.zeros_like(t * th))
        case = ComparisonCase(flat_disk, space_form_ball(1.0, 2, 1.0),
                              "sectional", "disk-vs-sphere",
                              grid_2d=(128, 64))
        v = verify_sectional_comparison(case)
        assert v.premises_hold and v.conclusion_holds
        assert v.lambda_subject == pytest.approx(5.783186, abs=2e-3)


class TestRicciComparison:
    def test_sphere_versus_flat(self):
        case = ComparisonCase(space_form_ball(1.0, 2, 1.0), space_form_ball(0.0, 2, 1.0),
                              "ricci", "sphere-vs-flat")
        v = verify_ricci_comparison(case)
        assert v.premises_hold and v.conclusion_holds
        assert v.lambda_subject < v.lambda_model

    def test_equality_case_transport_relation(self):
        ball = space_form_ball(1.0, 2, 1.0, polynomial_drift([1.0]))
        v = verify_ricci_comparison(ComparisonCase(ball, ball, "ricci", "same"))
        assert v.equality_case
        resid = [n for n in v.notes if n.startswith("transport residual")]
        assert resid and float(resid[0].split()[-1]) < 1e-6

    def test_drift_pair_with_pointwise_condition(self):
        # subject 2t on flat vs model t on hyperbolic: condition holds pointwise
        subject = space_form_ball(0.0, 2, 1.0, polynomial_drift([2.0]))
        model = space_form_ball(-1.0, 2, 1.0, polynomial_drift([1.0]))
        v = verify_ricci_comparison(ComparisonCase(subject, model, "ricci", "2t-vs-t"))
        assert v.premises_hold and v.conclusion_holds

    def test_negative_model_drift_fails_premise(self):
        subject = space_form_ball(0.0, 2, 1.0)
        model = space_form_ball(0.0, 2, 1.0, polynomial_drift([-1.0]))
        v = verify_ricci_comparison(ComparisonCase(subject, model, "ricci", "h<0"))
        assert not v.premises_hold

    def test_sign_changing_subject_drift_is_noted(self):
        subject = space_form_ball(0.0, 2, 1.0, polynomial_drift([1.0, -2.0]))
        model = space_form_ball(0.0, 2, 1.0, polynomial_drift([1.0]))
        v = verify_ricci_comparison(ComparisonCase(subject, model, "ricci", "sign-change"))
        assert any("changes sign" in n for n in v.notes)

    def test_disk_subject_margins_reported_pointwise(self):
        # angularly modulated radial drift against the pure model: the
        # pointwise condition fails on part of the circle, and the verdict
        # carries the (negative) margin instead of asserting anything
        wobble = AnalyticDisk(
            r0=1.0,
            J=lambda t, th: t * np.ones_like(th * 1.0),
            J_t=lambda t, th: np.ones_like(t * th),
            J_tt=lambda t, th: np.zeros_like(t * th),
            h1=lambda t, th: t * (1.0 + 0.1 * np.sin(th)),
            h1_t=lambda t, th: 1.0 + 0.1 * np.sin(th))
        model = space_form_ball(0.0, 2, 1.0, polynomial_drift([1.0]))
        v = verify_ricci_comparison(ComparisonCase(wobble, model, "ricci", "wobble"))
        assert not v.premises_hold
        assert v.premise_margins["extra_condition"] < 0.0
        assert v.premise_margins["ricci"] >= -1e-9


class TestDivergenceComparison:
    def test_rotation_field_equality(self):
        p = build_model_disk(FLAT, drift_angular=lambda t, th: 0.5 * np.ones_like(t),
                             n_t=96, n_theta=48)
        v = verify_divergence_comparison(p, tol=1e-8)
        assert v.premises_hold and v.conclusion_holds and v.equality_case

    def test_contracting_field_strict_inequality(self):
        ball = euclidean_ball(2, 1.0, polynomial_drift([-0.25]))
        p = build_model_disk(ball, n_t=96, n_theta=48)
        v = verify_divergence_comparison(p, tol=1e-8)
        assert v.premises_hold and v.conclusion_holds
        assert v.margin > 1e-3  # strictly larger eigenvalue with the drift

    def test_positive_divergence_rejected(self):
        ball = euclidean_ball(2, 1.0, polynomial_drift([0.25]))
        p = build_model_disk(ball, n_t=96, n_theta=48)
        v = verify_divergence_comparison(p)
        assert not v.premises_hold

    def test_no_drift_trivially_equal(self):
        p = build_model_disk(FLAT, n_t=96, n_theta=48)
        v = verify_divergence_comparison(p, tol=1e-10)
        assert v.premises_hold and v.conclusion_holds and v.equality_case
        assert v.margin == pytest.approx(0.0, abs=1e-12)


class TestSandwich:
    def test_no_drift_collapses(self):
        p = build_model_disk(FLAT, n_t=96, n_theta=48)
        res = eigenvalue_sandwich(p, tol=1e-8)
        assert abs(res.lower_gap) < 1e-10
        assert abs(res.upper_gap) < 1e-10

    def test_rotation_field(self):
        p = build_model_disk(FLAT, drift_angular=lambda t, th: 0.7 * np.ones_like(t),
                             n_t=96, n_theta=48)
        res = eigenvalue_sandwich(p, tol=1e-8)
        assert res.lower_gap >= -res.combined_tol
        assert res.upper_gap >= -res.combined_tol

    def test_gradient_field(self):
        ball = euclidean_ball(2, 1.0, polynomial_drift([0.4]))
        p = build_model_disk(ball, n_t=96, n_theta=48)
        res = eigenvalue_sandwich(p, tol=1e-8)
        assert res.lower_gap >= -res.combined_tol
        assert res.upper_gap >= -1e-10  # exact at matrix level


class TestEigenvalueDerivative:
    def test_radial_quadratic(self):
        d = derivative_lambda_eps(
            euclidean_ball(2, 1.0),
            (lambda t: np.asarray(t, dtype=float) ** 2 / 2,
             lambda t: np.asarray(t, dtype=float),
             lambda t: np.ones_like(np.asarray(t, dtype=float))),
            eps=1e-3)
        assert d == pytest.approx(-1.0, abs=1e-3)

    def test_nonconstant_laplacian_rejected(self):
        with pytest.raises(ValueError):
            derivative_lambda_eps(
                euclidean_ball(2, 1.0),
                (lambda t: np.asarray(t, dtype=float) ** 4,
                 lambda t: 4.0 * np.asarray(t, dtype=float) ** 3,
                 lambda t: 12.0 * np.asarray(t, dtype=float) ** 2),
                eps=1e-3)

    def test_constant_f_gives_zero(self):
        d = derivative_lambda_eps(
            euclidean_ball(2, 1.0),
            (lambda t: np.ones_like(np.asarray(t, dtype=float)),
             lambda t: np.zeros_like(np.asarray(t, dtype=float)),
             lambda t: np.zeros_like(np.asarray(t, dtype=float))),
            eps=1e-3, tol=1e-10)
        assert d == 0.0


class TestRiccati:
    @pytest.mark.parametrize("m,coeffs", [(2, [2.0]), (3, [1.0]), (3, [1.0, 1.0])])
    def test_self_consistency(self, m, coeffs):
        ball = euclidean_ball(m, 1.0, polynomial_drift(coeffs))
        res = riccati_uniqueness(ball, tol=1e-6)
        assert res.sup_error < 1e-6

    def test_zero_drift_fixed_point(self):
        res = riccati_uniqueness(euclidean_ball(3, 1.0), tol=1e-10)
        assert np.max(np.abs(res.h_recovered)) < 1e-10

    def test_wrong_slope_selects_excluded_branch(self):
        with pytest.raises(LogarithmicBranchError):
            riccati_uniqueness(euclidean_ball(3, 1.0, polynomial_drift([1.0])),
                               u_prime0=1.0)

    def test_curved_profile(self):
        ball = space_form_ball(-1.0, 3, 1.0, polynomial_drift([0.5]))
        assert riccati_uniqueness(ball, tol=1e-6).sup_error < 1e-6


class TestIntegrationByParts:
    def test_flat_disk_closed_form(self):
        p = build_model_disk(FLAT, n_t=128, n_theta=64)
        T, _ = p.grid.mesh()
        # both sides equal -pi for u=1-t^2, phi=t
        defect = radial_ibp_check(p, 1.0 - T ** 2, T)
        assert defect < 5e-4 * math.pi

    def test_zero_cases(self):
        p = build_model_disk(FLAT, n_t=64, n_theta=32)
        T, _ = p.grid.mesh()
        assert radial_ibp_check(p, 1.0 - T ** 2, np.zeros_like(T)) == 0.0
        assert radial_ibp_check(p, np.zeros_like(T), T) == 0.0

    def test_origin_condition_enforced(self):
        p = build_model_disk(FLAT, n_t=64, n_theta=32)
        T, _ = p.grid.mesh()
        with pytest.raises(ValueError):
            radial_ibp_check(p, 1.0 - T ** 2, np.ones_like(T))


def test_divergence_monotonicity_equivalence():
    # for h1 >= 0: div(V) >= 0 exactly where h1 J^{m-1} is nondecreasing
    rng = np.random.default_rng(5)
    t = np.linspace(0.05, 1.0, 300)
    for m in (2, 3, 4):
        for _ in range(8):
            c = rng.uniform(-1.0, 1.5, size=3)
            h1 = t * (1.2 + c[0] * t + c[1] * t ** 2 + c[2] * np.sin(3 * t)) ** 2
            J = t * (1.0 + 0.2 * t ** 2)
            div, dprod = radial_divergence_profile(h1, J, t, m)
            interior = slice(2, -2)
            assert np.all((div[interior] >= -1e-9) == (dprod[interior] >= -1e-9 * J[interior] ** (m - 1)))


class TestCorpus:
    def test_twelve_cases(self):
        assert len(builtin_corpus()) == 12

    def test_serializers(self):
        cases = builtin_corpus()[:2]
        verdicts = [run_case(c) for c in cases]
        js = verdicts_to_json(verdicts)
        assert '"premises_hold"' in js
        csv = verdicts_to_csv(verdicts)
        assert csv.startswith("case_id,premises,lambda_subject")
        assert len(csv.strip().split("\n")) == 3
