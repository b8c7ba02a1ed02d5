import numpy as np
import pytest

from rayreduce.algebra import _null_space, abelian, kernel_algebra
from rayreduce.spheres import (
    ConePoint,
    ContactSphere,
    KernelPhaseGauge,
    cone_compatibility_error,
    cone_form_eval,
    cone_momentum,
    contact_momentum,
    d_eta,
    d_eta_fd,
    eta,
    generator_field,
    hopf_project,
    reeb_field,
    reeb_flow,
    reeb_invariance_error,
    sample_level_set,
    to_complex,
    to_real,
    torus_element,
)


def sphere_tangent(rng, z):
    v = rng.normal(size=z.shape)
    return v - (v @ z) * z


class TestReeb:
    def test_m1_explicit(self):
        s1 = ContactSphere(1, [[1.0]])
        np.testing.assert_allclose(reeb_field(s1, np.array([1.0, 0.0])),
                                   [0.0, -1.0])

    def test_normalization(self, s7_unweighted):
        rng = np.random.default_rng(0)
        for _ in range(100):
            z = s7_unweighted.random_point(rng)
            r = reeb_field(s7_unweighted, z)
            assert eta(s7_unweighted, z, r) == pytest.approx(1.0, abs=1e-12)

    def test_tangency(self, s7_unweighted):
        rng = np.random.default_rng(1)
        for _ in range(100):
            z = s7_unweighted.random_point(rng)
            assert abs(z @ reeb_field(s7_unweighted, z)) < 1e-12

    def test_d_eta_degenerate_on_reeb(self, s7_unweighted):
        rng = np.random.default_rng(2)
        for _ in range(20):
            z = s7_unweighted.random_point(rng)
            r = reeb_field(s7_unweighted, z)
            v = sphere_tangent(rng, z)
            assert abs(d_eta(r, v)) < 1e-12

    def test_d_eta_fd_cross_check(self, s7_unweighted):
        rng = np.random.default_rng(3)
        for _ in range(10):
            z = s7_unweighted.random_point(rng)
            u = sphere_tangent(rng, z)
            v = sphere_tangent(rng, z)
            assert d_eta_fd(s7_unweighted, z, u, v) == pytest.approx(
                d_eta(u, v), abs=1e-6)


class TestMomentum:
    def test_printed_value(self, s7_unweighted):
        z = np.zeros(8)
        z[2] = 1.0   # z = (0, 1, 0, 0)
        np.testing.assert_allclose(contact_momentum(s7_unweighted, z),
                                   [1.0, 0.0], atol=1e-15)

    def test_zero_sum_row(self):
        sphere = ContactSphere(2, [[1.0, -1.0]])
        z = to_real(np.array([1.0, 1.0]) / np.sqrt(2) + 0j)
        assert contact_momentum(sphere, z)[0] == pytest.approx(0.0, abs=1e-14)

    def test_weighted_value(self, s7_weighted):
        z = np.zeros(8)
        z[2] = 1.0
        np.testing.assert_allclose(contact_momentum(s7_weighted, z),
                                   [0.0, 2.0], atol=1e-15)

    def test_pairing_with_generator(self, s7_weighted):
        rng = np.random.default_rng(4)
        for _ in range(50):
            z = s7_weighted.random_point(rng)
            xi = rng.normal(size=2)
            lhs = eta(s7_weighted, z, generator_field(s7_weighted, xi, z))
            rhs = contact_momentum(s7_weighted, z) @ xi
            assert lhs == pytest.approx(rhs, abs=1e-12)


class TestReebInvariance:
    def test_zero_time(self, s7_unweighted):
        rng = np.random.default_rng(5)
        z = s7_unweighted.random_point(rng)
        assert reeb_invariance_error(s7_unweighted, z, 0.0) == 0.0

    def test_both_scenarios(self, s7_unweighted, s7_weighted):
        rng = np.random.default_rng(6)
        for sphere in (s7_unweighted, s7_weighted):
            for _ in range(10):
                z = sphere.random_point(rng)
                assert reeb_invariance_error(sphere, z, 2 * np.pi) <= 1e-12

    def test_period(self, s7_unweighted):
        rng = np.random.default_rng(7)
        z = s7_unweighted.random_point(rng)
        assert np.abs(reeb_flow(z, 2 * np.pi) - z).max() < 1e-12


class TestHopf:
    def test_fiber_constant(self, s7_unweighted):
        rng = np.random.default_rng(8)
        for _ in range(20):
            z = s7_unweighted.random_point(rng)
            theta = rng.uniform(0, 2 * np.pi)
            moved = to_real(np.exp(1j * theta) * to_complex(z))
            assert np.abs(hopf_project(s7_unweighted, moved)
                          - hopf_project(s7_unweighted, z)).max() < 1e-12

    def test_normalizes_last_coordinate(self):
        s2 = ContactSphere(2, [[1.0, 1.0]])
        z = to_real(np.array([0.0, np.exp(1.3j)]))
        np.testing.assert_allclose(hopf_project(s2, z), [0.0, 0.0, 1.0, 0.0],
                                   atol=1e-15)

    def test_momentum_descends(self, s7_unweighted):
        rng = np.random.default_rng(9)
        for _ in range(100):
            z = s7_unweighted.random_point(rng)
            rep = hopf_project(s7_unweighted, z)
            np.testing.assert_allclose(contact_momentum(s7_unweighted, rep),
                                       contact_momentum(s7_unweighted, z),
                                       atol=1e-12)

    def test_idempotent(self, s7_unweighted):
        rng = np.random.default_rng(10)
        z = s7_unweighted.random_point(rng)
        once = hopf_project(s7_unweighted, z)
        np.testing.assert_allclose(hopf_project(s7_unweighted, once), once,
                                   atol=1e-15)


class TestConeForm:
    def test_equal_vectors_vanish(self, s3_diagonal):
        rng = np.random.default_rng(11)
        z = s3_diagonal.random_point(rng)
        v = np.append(sphere_tangent(rng, z), rng.normal())
        assert cone_form_eval(ConePoint(s3_diagonal, z, 1.3), v, v) == 0.0

    def test_radial_against_reeb(self, s3_diagonal):
        rng = np.random.default_rng(12)
        z = s3_diagonal.random_point(rng)
        point = ConePoint(s3_diagonal, z, 1.0)
        radial = np.zeros(5)
        radial[-1] = 1.0
        reeb = np.append(reeb_field(s3_diagonal, z), 0.0)
        assert cone_form_eval(point, radial, reeb) == pytest.approx(2.0,
                                                                    abs=1e-14)

    def test_contact_distribution_reduces_to_d_eta(self, s3_diagonal):
        rng = np.random.default_rng(13)
        z = s3_diagonal.random_point(rng)
        point = ConePoint(s3_diagonal, z, 1.0)
        reeb = reeb_field(s3_diagonal, z)
        u = sphere_tangent(rng, z)
        u -= eta(s3_diagonal, z, u) * reeb
        v = sphere_tangent(rng, z)
        v -= eta(s3_diagonal, z, v) * reeb
        val = cone_form_eval(point, np.append(u, 0.0), np.append(v, 0.0))
        assert val == pytest.approx(d_eta(u, v), abs=1e-13)

    def test_non_tangent_rejected(self, s3_diagonal):
        rng = np.random.default_rng(14)
        z = s3_diagonal.random_point(rng)
        bad = np.append(z, 0.0)   # radial in the sphere factor
        with pytest.raises(ValueError, match="tangent"):
            cone_form_eval(ConePoint(s3_diagonal, z, 1.0), bad, bad)

    def test_cone_momentum_scales_linearly(self, s3_diagonal):
        rng = np.random.default_rng(15)
        z = s3_diagonal.random_point(rng)
        j1 = cone_momentum(ConePoint(s3_diagonal, z, 1.0))
        j2 = cone_momentum(ConePoint(s3_diagonal, z, 2.0))
        np.testing.assert_allclose(j2, 2.0 * j1)


class TestConeCompatibility:
    def test_s3_scenario(self, s3_diagonal):
        result = cone_compatibility_error(s3_diagonal, np.array([1.0]), 100, 7)
        assert result.form_error <= 1e-8
        assert result.homogeneity_error <= 1e-10

    def test_torus_scenario_with_kernel_circle(self):
        sphere = ContactSphere(2, [[1.0, 0.0], [0.0, 1.0]])
        result = cone_compatibility_error(sphere, np.array([1.0, 1.0]), 100, 7)
        assert result.form_error <= 1e-8

    def test_scaling_covariance(self, s3_diagonal):
        rng = np.random.default_rng(16)
        z = s3_diagonal.random_point(rng)
        reeb = reeb_field(s3_diagonal, z)
        u = sphere_tangent(rng, z)
        u -= eta(s3_diagonal, z, u) * reeb
        v = sphere_tangent(rng, z)
        v -= eta(s3_diagonal, z, v) * reeb
        r = 0.8
        base = cone_form_eval(ConePoint(s3_diagonal, z, r),
                              np.append(u, 0.0), np.append(v, 0.0))
        doubled = cone_form_eval(ConePoint(s3_diagonal, z, 2 * r),
                                 np.append(u, 0.0), np.append(v, 0.0))
        assert abs(doubled / base - 4.0) / 4.0 <= 1e-10


class TestKernelPhaseGauge:
    def test_trivial_gauge_is_identity(self, s3_diagonal):
        gauge = KernelPhaseGauge(np.zeros(2))
        rng = np.random.default_rng(17)
        z = s3_diagonal.random_point(rng)
        np.testing.assert_allclose(gauge.fix(z), z)

    def test_fix_invariance_under_kernel_circle(self):
        sphere = ContactSphere(2, [[1.0, 0.0], [0.0, 1.0]])
        basis = kernel_algebra(abelian(2), np.array([1.0, 1.0])).basis
        gauge = KernelPhaseGauge(basis[0] @ sphere.weights)
        rng = np.random.default_rng(18)
        for _ in range(20):
            z = sphere.random_point(rng)
            g = torus_element(sphere, basis[0] * rng.uniform(-3, 3))
            np.testing.assert_allclose(gauge.fix(g(z)), gauge.fix(z),
                                       atol=1e-12)

    def test_differential_matches_fd(self):
        sphere = ContactSphere(2, [[1.0, 0.0], [0.0, 1.0]])
        basis = kernel_algebra(abelian(2), np.array([1.0, 1.0])).basis
        gauge = KernelPhaseGauge(basis[0] @ sphere.weights)
        rng = np.random.default_rng(19)
        for _ in range(10):
            z = sphere.random_point(rng)
            v = rng.normal(size=4)
            h = 1e-6
            fd = (gauge.fix(z + h * v) - gauge.fix(z - h * v)) / (2 * h)
            np.testing.assert_allclose(gauge.differential(z, v), fd,
                                       atol=1e-8)


class TestLevelSampler:
    def test_residuals_and_determinism(self, s7_unweighted):
        mu = np.array([1.0, 1.0])
        pts1, _ = sample_level_set(s7_unweighted, mu, 200, 5)
        pts2, _ = sample_level_set(s7_unweighted, mu, 200, 5)
        np.testing.assert_array_equal(pts1, pts2)
        perp = _null_space(mu[None, :])
        for z in pts1[:50]:
            j = contact_momentum(s7_unweighted, z)
            assert np.abs(perp @ j).max() <= 1e-10 * (1 + np.linalg.norm(j))
            assert j @ mu > 0


class TestHorizontalComplexInvariance:
    """On the cone over a toric sphere, the horizontal distribution of the
    quotient (constraint tangent minus kernel generators) is invariant
    under the ambient complex structure."""

    @pytest.mark.parametrize("weights,mu", [
        ([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]),
        ([[-1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]], [1.0, 1.0]),
    ])
    def test_complex_invariance(self, weights, mu):
        sphere = ContactSphere(len(weights[0]), weights)
        mu = np.asarray(mu)
        basis = kernel_algebra(abelian(sphere.k), mu).basis
        pts, _ = sample_level_set(sphere, mu, 20, 11)
        rng = np.random.default_rng(20)
        perp = _null_space(mu[None, :])
        for z in pts:
            y = rng.uniform(0.5, 2.0) * z      # a cone point embedded in C^m
            rows = [2.0 * to_real(c * to_complex(y))
                    for c in perp @ sphere.weights]
            gens = [generator_field_unnormalized(sphere, kv, y)
                    for kv in basis]
            # horizontal projector: tangent to the constraint, orthogonal
            # to the kernel generators
            constraints = np.vstack(rows) if rows else np.zeros((0, y.size))
            frame = []
            for _ in range(2 * sphere.m):
                v = rng.normal(size=y.size)
                v = _project_out(v, constraints)
                v = _project_out(v, np.vstack(gens) if gens else None)
                frame.append(v)
            frame = np.vstack(frame)
            q, s, _ = np.linalg.svd(frame.T, full_matrices=False)
            h_basis = q[:, s > 1e-8 * s[0]]    # orthonormal horizontal frame
            for col in h_basis.T:
                jc = to_real(1j * to_complex(col))
                resid = jc - h_basis @ (h_basis.T @ jc)
                assert np.abs(resid).max() < 1e-9


def generator_field_unnormalized(sphere, xi, y):
    w = xi @ sphere.weights
    return to_real(-1j * w * to_complex(y))


def _project_out(v, rows):
    if rows is None or rows.size == 0:
        return v
    q, _ = np.linalg.qr(rows.T)
    return v - q @ (q.T @ v)
