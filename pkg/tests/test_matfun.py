import numpy as np
import pytest

from sketchmf.matfun import (EXP_NEG, INV_SQRT, LOG1P_OVER_Z, BranchCutError,
                             FunctionSpec, QuadratureCapExceeded,
                             adapt_quadrature, contour_rule, dense_matfun,
                             node_proximity_warnings, scalar_eval,
                             stieltjes_rule)


class TestFunctionSpec:
    def test_classification(self):
        assert INV_SQRT.classification == "stieltjes"
        assert FunctionSpec("inv-pow", alpha=0.5).classification == "stieltjes"
        assert LOG1P_OVER_Z.classification == "stieltjes"
        assert EXP_NEG.classification == "entire"
        assert FunctionSpec("sign-via-invsqrt").classification == "other"

    def test_inv_pow_alpha_validated(self):
        with pytest.raises(ValueError):
            FunctionSpec("inv-pow", alpha=1.0)
        with pytest.raises(ValueError):
            FunctionSpec("inv-pow")

    def test_poly_needs_coeffs(self):
        with pytest.raises(ValueError):
            FunctionSpec("poly")


class TestScalarEval:
    def test_inv_sqrt(self):
        assert scalar_eval(INV_SQRT, 4.0) == pytest.approx(0.5)

    def test_exp_neg_at_zero(self):
        assert scalar_eval(EXP_NEG, 0.0) == pytest.approx(1.0)

    def test_log1p_over_z(self):
        assert scalar_eval(LOG1P_OVER_Z, 1.0) \
            == pytest.approx(0.6931471805599453)

    def test_log1p_removable_point(self):
        assert scalar_eval(LOG1P_OVER_Z, 1e-12) == pytest.approx(1.0)

    def test_sign(self):
        assert scalar_eval(FunctionSpec("sign-via-invsqrt"), -3.0) \
            == pytest.approx(-1.0)
        assert scalar_eval(FunctionSpec("sign-via-invsqrt"), 2.0 + 0.1j) \
            == pytest.approx(1.0, abs=1e-12)

    def test_branch_cut_errors(self):
        with pytest.raises(BranchCutError):
            scalar_eval(INV_SQRT, -1.0)
        with pytest.raises(BranchCutError):
            scalar_eval(LOG1P_OVER_Z, -2.0)
        with pytest.raises(BranchCutError):
            scalar_eval(FunctionSpec("sign-via-invsqrt"), 1j)


class TestStieltjesRule:
    def test_invsqrt_at_one(self):
        rule = stieltjes_rule(INV_SQRT, 45, z_range=(1.0, 1.0))
        assert abs(rule.scalar(1.0) - 1.0) <= 1e-12

    def test_invsqrt_sweep_45(self):
        rule = stieltjes_rule(INV_SQRT, 45, z_range=(0.1, 100.0))
        zs = np.logspace(-1, 2, 200)
        errs = [abs(rule.scalar(z) - scalar_eval(INV_SQRT, z))
                * np.sqrt(z) for z in zs]
        assert max(errs) <= 1e-10

    def test_invsqrt_sweep_176(self):
        rule = stieltjes_rule(INV_SQRT, 176, z_range=(1e-2, 1e4))
        zs = np.logspace(-2, 4, 300)
        errs = [abs(rule.scalar(z) - scalar_eval(INV_SQRT, z))
                * np.sqrt(z) for z in zs]
        assert max(errs) <= 1e-7

    def test_nodes_real_nonnegative(self):
        for f in (INV_SQRT, FunctionSpec("inv-pow", alpha=0.3), LOG1P_OVER_Z):
            rule = stieltjes_rule(f, 30, z_range=(0.5, 50.0))
            assert np.all(rule.nodes >= 0)
            assert np.isrealobj(rule.nodes) and np.isrealobj(rule.weights)

    def test_inv_pow_scalar_oracle(self):
        f = FunctionSpec("inv-pow", alpha=0.7)
        rule = stieltjes_rule(f, 60, z_range=(0.5, 20.0))
        for z in (0.5, 2.0, 20.0):
            assert abs(rule.scalar(z) - scalar_eval(f, z)) \
                <= 1e-9 * abs(scalar_eval(f, z))

    def test_log1p_convergence_improves(self):
        f = LOG1P_OVER_Z
        exact = scalar_eval(f, 10.0)
        e1 = abs(stieltjes_rule(f, 20, (1.0, 20.0)).scalar(10.0) - exact)
        e2 = abs(stieltjes_rule(f, 40, (1.0, 20.0)).scalar(10.0) - exact)
        # halves-or-better until the rounding floor
        assert e2 <= max(e1 / 2, 5e-16)

    def test_non_stieltjes_rejected(self):
        with pytest.raises(ValueError):
            stieltjes_rule(EXP_NEG, 10)


class TestContourRule:
    def test_single_ritz_value(self):
        rule = contour_rule(EXP_NEG, np.array([1.0]), 100)
        assert abs(rule.scalar(1.0) - np.exp(-1.0)) <= 1e-8

    def test_complex_cloud(self):
        rng = np.random.default_rng(0)
        ritz = rng.uniform(1, 6, 20) + 1j * rng.uniform(-2, 2, 20)
        rule = contour_rule(EXP_NEG, ritz, 100)
        errs = [abs(rule.scalar(z) - np.exp(-z)) for z in ritz]
        assert max(errs) <= 1e-8

    def test_tail_truncation_converged(self):
        from sketchmf.matfun import _parabola_rule
        # doubling the half-width at fixed node density barely moves the
        # result: the integrand tail is already below 1e-16
        r1 = _parabola_rule(3.0, 0.25, 200, tail=39.0)
        r2 = _parabola_rule(3.0, 0.25, 399, tail=156.0)  # U doubled
        for z in (1.0, 2.0 + 1.0j, 2.0 - 1.0j):
            assert abs(r1.scalar(z) - r2.scalar(z)) < 1e-10

    def test_unencloseable_cloud_rejected(self):
        ritz = np.array([0.0 + 100.0j, 0.0 - 100.0j, 100.0])
        with pytest.raises(ValueError):
            contour_rule(EXP_NEG, ritz, 50)

    def test_only_exp_neg(self):
        with pytest.raises(ValueError):
            contour_rule(INV_SQRT, np.array([1.0]), 10)


class TestAdaptQuadrature:
    def test_constant_accepts_immediately(self):
        calls = []

        def evaluate(order):
            calls.append(order)
            return np.array([1.0])

        out, order = adapt_quadrature(evaluate, 8, 11, 1e-10)
        assert order == 11
        assert calls == [8, 11]

    def test_scalar_invsqrt(self):
        def evaluate(order):
            return np.array([stieltjes_rule(INV_SQRT, order, (1.0, 1.0)).scalar(1.0)])

        out, order = adapt_quadrature(evaluate, 8, 11, 1e-10)
        assert abs(out[0] - 1.0) <= 1e-10

    def test_promotion_sequence(self):
        orders = []

        def evaluate(order):
            orders.append(order)
            return np.array([1.0 / order])  # slowly converging

        with pytest.raises(QuadratureCapExceeded):
            adapt_quadrature(evaluate, 16, 23, 1e-14, cap=100)
        # floor(sqrt(2) * ell) iterates from 23, one new rule per loop
        assert orders[:6] == [16, 23, 32, 45, 63, 89]

    def test_cap_error_carries_discrepancy(self):
        def evaluate(order):
            return np.array([float(order)])

        with pytest.raises(QuadratureCapExceeded) as exc:
            adapt_quadrature(evaluate, 4, 6, 1e-16, cap=10)
        assert exc.value.discrepancy > 0


class TestDenseMatfun:
    def test_invsqrt_diagonal(self):
        out = dense_matfun(INV_SQRT, np.diag([4.0, 9.0]))
        np.testing.assert_allclose(out, np.diag([0.5, 1.0 / 3.0]), atol=1e-13)

    def test_exp_neg_zero_matrix(self):
        np.testing.assert_allclose(dense_matfun(EXP_NEG, np.zeros((3, 3))),
                                   np.eye(3), atol=1e-13)

    def test_dual_path_cross_check(self, rng):
        # diagonalization vs resolvent quadrature on a diagonalizable matrix
        d = np.diag(rng.uniform(1, 10, 20))
        w = np.eye(20) + 0.1 * rng.standard_normal((20, 20))
        mat = w @ d @ np.linalg.inv(w)
        via_diag = dense_matfun(INV_SQRT, mat)
        via_quad = dense_matfun(INV_SQRT, mat, cond_limit=0.0)
        assert np.linalg.norm(via_diag - via_quad) \
            <= 1e-9 * np.linalg.norm(via_diag)

    def test_poly_exact_powers(self, rng):
        mat = rng.standard_normal((6, 6))
        f = FunctionSpec("poly", coeffs=(1.0, -2.0, 0.5))
        expected = np.eye(6) - 2 * mat + 0.5 * mat @ mat
        np.testing.assert_allclose(dense_matfun(f, mat), expected, atol=1e-12)

    def test_branch_cut_reports_critical_ritz(self):
        with pytest.raises(BranchCutError, match="critical Ritz value"):
            dense_matfun(INV_SQRT, np.diag([1.0, -2.0]))

    def test_unitary_diagonal_similarity(self, rng):
        mat = np.diag(rng.uniform(1, 5, 8)) + 0.01 * rng.standard_normal((8, 8))
        mat = (mat + mat.T) / 2  # normal input
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        d = np.diag(phases)
        lhs = dense_matfun(INV_SQRT, d @ mat @ np.linalg.inv(d))
        rhs = d @ dense_matfun(INV_SQRT, mat) @ np.linalg.inv(d)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_nonsquare_rejected(self):
        with pytest.raises(ValueError):
            dense_matfun(INV_SQRT, np.ones((2, 3)))


class TestNodeProximityWarnings:
    def test_flags_collision(self):
        rule = stieltjes_rule(INV_SQRT, 20, (0.5, 50.0))
        lam = -rule.nodes[3] + 1e-12
        warnings = node_proximity_warnings(rule, np.array([lam]))
        assert len(warnings) == 1

    def test_silent_when_clear(self):
        rule = stieltjes_rule(INV_SQRT, 20, (0.5, 50.0))
        assert node_proximity_warnings(rule, np.array([5.0 + 2.0j])) == []
