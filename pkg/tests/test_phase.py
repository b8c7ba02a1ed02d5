import numpy as np
import pytest
from scipy.linalg import expm

from rayreduce.algebra import abelian
from rayreduce.phase import (
    ConformalSystem,
    LinearConfigAction,
    PhasePoint,
    PolynomialField,
    QuadraticField,
    ScalarField,
    conformal_field,
    infinitesimal_generator,
    momentum_decay_rate,
    momentum_map,
    theta,
)
from rayreduce.systems import harmonic, rayleigh4

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def circle_action():
    return LinearConfigAction((ROT2,), algebra=abelian(1))


class TestGenerator:
    def test_circle_matrix_oracle(self):
        # A q and -A^T p computed by hand for A = [[0,-1],[1,0]]
        x = PhasePoint(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        dq, dp = infinitesimal_generator(circle_action(), np.array([1.0]), x)
        np.testing.assert_allclose(dq, [0.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(dp, -(ROT2.T @ x.p), atol=1e-15)
        np.testing.assert_allclose(dp, [-1.0, 0.0], atol=1e-15)

    def test_zero_element(self):
        x = PhasePoint(np.array([0.3, -0.7]), np.array([1.0, 2.0]))
        dq, dp = infinitesimal_generator(circle_action(), np.array([0.0]), x)
        assert not np.any(dq) and not np.any(dp)

    def test_rayleigh_second_block(self, rayleigh):
        alpha = 1.7
        x = PhasePoint(np.array([0, 0, 0, alpha], float),
                       np.array([0, 0, -alpha, 0], float))
        dq, dp = infinitesimal_generator(rayleigh.action, np.array([0.0, 1.0]), x)
        np.testing.assert_allclose(dq[2:], [-alpha, 0.0], atol=1e-15)
        np.testing.assert_allclose(dp[2:], [0.0, -alpha], atol=1e-15)
        assert not np.any(dq[:2]) and not np.any(dp[:2])

    def test_theta_pairing(self, rayleigh):
        # theta(xi_M) = p . (A_xi q)
        rng = np.random.default_rng(2)
        x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
        xi = rng.normal(size=2)
        dq, dp = infinitesimal_generator(rayleigh.action, xi, x)
        v = np.concatenate([dq, dp])
        assert theta(x, v) == pytest.approx(
            float(x.p @ (rayleigh.action.matrix(xi) @ x.q)), abs=1e-12)


class TestMomentumMap:
    def test_rayleigh_first_component(self, rayleigh):
        x = PhasePoint(np.array([1.0, 0.0, 0.3, 0.4]),
                       np.array([0.0, 2.0, -0.1, 0.9]))
        j = momentum_map(rayleigh, x)
        # q1 . (p12, -p11) = 1 * 2 - 0 * 0
        assert j[0] == pytest.approx(2.0, abs=1e-14)
        assert j[1] == pytest.approx(0.3 * 0.9 - 0.4 * (-0.1), abs=1e-14)

    def test_zero_momentum(self, rayleigh):
        x = PhasePoint(np.array([1.0, 2, 3, 4]), np.zeros(4))
        np.testing.assert_allclose(momentum_map(rayleigh, x), np.zeros(2))

    def test_circle_on_r2(self):
        sys1 = ConformalSystem(2, QuadraticField(2, np.ones(4)),
                               QuadraticField(2, np.zeros(4)),
                               circle_action(), validate=False)
        x = PhasePoint(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert momentum_map(sys1, x)[0] == pytest.approx(-1.0, abs=1e-15)


class TestConformalField:
    def test_constant_parameter(self):
        sysk = harmonic(2, 0.7)
        rng = np.random.default_rng(3)
        x = PhasePoint(rng.normal(size=2), rng.normal(size=2))
        dq, dp = conformal_field(sysk, x)
        np.testing.assert_allclose(dq, x.p, atol=1e-14)
        np.testing.assert_allclose(dp, -x.q - 0.7 * x.p, atol=1e-14)

    def test_zero_parameter_is_hamiltonian(self):
        sys0 = harmonic(2, 0.0)
        x = PhasePoint(np.array([0.2, -1.0]), np.array([0.5, 0.1]))
        dq, dp = conformal_field(sys0, x)
        np.testing.assert_allclose(dq, x.p)
        np.testing.assert_allclose(dp, -x.q)

    def test_equilibrium_field_equals_generator(self, rayleigh):
        alpha = 1.0
        x = PhasePoint(np.array([0, 0, 0, alpha], float),
                       np.array([0, 0, -alpha, 0], float))
        assert rayleigh.conformal_factor(x) == 0.0
        dq, dp = conformal_field(rayleigh, x)
        gq, gp = infinitesimal_generator(rayleigh.action, np.array([0.0, 1.0]), x)
        np.testing.assert_allclose(dq, gq, atol=1e-15)
        np.testing.assert_allclose(dp, gp, atol=1e-15)


class TestDecayRate:
    def test_zero_f(self):
        sys0 = harmonic(2, 0.0)
        x = PhasePoint(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(momentum_decay_rate(sys0, x), np.zeros(1))

    def test_product_form(self, rayleigh):
        rng = np.random.default_rng(4)
        x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
        out = momentum_decay_rate(rayleigh, x)
        expected = -rayleigh.conformal_factor(x) * momentum_map(rayleigh, x)
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_constant_f_scale(self):
        sysk = harmonic(2, 3.0)
        x = PhasePoint(np.array([1.0, 0.0]), np.array([0.0, 2.0]))
        j = momentum_map(sysk, x)
        np.testing.assert_allclose(momentum_decay_rate(sysk, x), -3.0 * j)


class TestInvariants:
    def test_theta_preserved_by_lifted_flow(self, rayleigh):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
            v = rng.normal(size=8)
            angles = rng.normal(size=2)
            a = rayleigh.action.matrix(angles)
            gq, gp = expm(a), expm(-a.T)
            x2 = PhasePoint(gq @ x.q, gp @ x.p)
            v2 = np.concatenate([gq @ v[:4], gp @ v[4:]])
            assert abs(theta(x2, v2) - theta(x, v)) < 1e-9

    def test_energy_dissipation_identity(self, rayleigh):
        rng = np.random.default_rng(6)
        for _ in range(20):
            x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
            dq, dp = conformal_field(rayleigh, x)
            gq, gp = rayleigh.hamiltonian.grad(x)
            dh = float(gq @ dq + gp @ dp)
            expected = -rayleigh.conformal_factor(x) * float(x.p @ gp)
            assert abs(dh - expected) < 1e-10 * (1 + abs(dh))

    def test_noether_decay_identity(self, rayleigh):
        rng = np.random.default_rng(7)
        for _ in range(20):
            x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
            field = np.concatenate(conformal_field(rayleigh, x))
            f = rayleigh.conformal_factor(x)
            j = momentum_map(rayleigh, x)
            for i in range(2):
                xi = np.zeros(2)
                xi[i] = 1.0
                a = rayleigh.action.matrix(xi)
                dj = np.concatenate([a.T @ x.p, a @ x.q])
                assert abs(float(dj @ field) + f * j[i]) < 1e-9

    def test_torus_equivariance(self, rayleigh):
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = PhasePoint(rng.normal(size=4), rng.normal(size=4))
            g = rayleigh.action.group_element(rng.normal(size=2))
            np.testing.assert_allclose(momentum_map(rayleigh, g(x)),
                                       momentum_map(rayleigh, x), atol=1e-9)


class TestScalarFields:
    def test_fd_matches_analytic(self):
        n = 3
        poly = PolynomialField(n, [(0.5, [2, 0, 0, 0, 0, 0]),
                                   (1.5, [1, 1, 0, 0, 2, 0]),
                                   (-0.25, [0, 0, 3, 1, 0, 0])])
        plain = ScalarField(poly._eval_poly)
        rng = np.random.default_rng(9)
        for _ in range(10):
            x = PhasePoint(rng.normal(size=n), rng.normal(size=n))
            ga = np.concatenate(poly.grad(x))
            gf = np.concatenate(plain.grad(x))
            assert np.abs(ga - gf).max() < 1e-5 * (1 + np.abs(ga).max())

    def test_polynomial_hessian(self):
        poly = PolynomialField(1, [(2.0, [3, 1])])
        x = PhasePoint(np.array([0.7]), np.array([-1.2]))
        hess = poly.hessian(x)
        # d2/dq2 = 12 q p, d2/dqdp = 6 q^2, d2/dp2 = 0
        assert hess[0, 0] == pytest.approx(12 * 0.7 * -1.2)
        assert hess[0, 1] == pytest.approx(6 * 0.7 ** 2)
        assert hess[1, 1] == 0.0

    def test_invariance_validation_rejects(self):
        # H depending on q1 only is not rotation invariant
        bad_h = QuadraticField(2, np.array([1.0, 0.0, 0.0, 0.0]))
        f = QuadraticField(2, np.zeros(4))
        with pytest.raises(ValueError, match="not invariant"):
            ConformalSystem(2, bad_h, f, circle_action())

    def test_nonfinite_point_rejected(self):
        with pytest.raises(ValueError):
            PhasePoint(np.array([np.nan, 0.0]), np.zeros(2))


class TestActionValidation:
    def test_commutator_closure_enforced(self):
        # two non-commuting generators declared as an abelian pair
        a1 = np.array([[0.0, 1.0], [0.0, 0.0]])
        a2 = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ValueError, match="close under commutator"):
            LinearConfigAction((a1, a2), algebra=abelian(2))

    def test_rayleigh_action_closes(self, rayleigh):
        assert rayleigh.action.k == 2
