"""Round contact spheres S^{2m-1} in C^m with weighted torus actions.

Points are stored as real 2m-vectors with interleaved layout
(x_0, y_0, x_1, y_1, ...), z_j = x_j + i y_j.  Conventions:

* Reeb field R(z) = -i z, flow z(t) = exp(-i t) z (period 2 pi);
* contact form eta_z(v) = <v, R(z)>, so eta(R) = 1 on the unit sphere;
* a torus generator with phase weights w acts as z_j -> exp(-i w_j t) z_j,
  with generator field (xi_S)_j = -i w_j z_j, so that the contact momentum
  J_i(z) = sum_j W[i][j] |z_j|^2 satisfies <J(z), xi> = eta(xi_S(z));
* d eta is minus twice the standard symplectic form of C^m;
* the symplectic cone carries d(r^2) ^ eta + r^2 d eta, and the lifted
  torus momentum is taken as r J(z) (only its ray pre-image, which does
  not depend on the positive radial factor, is ever used).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import _null_space
from .errors import SamplingError


def to_complex(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[..., 0::2] + 1j * v[..., 1::2]


def to_real(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@dataclass(frozen=True)
class ContactSphere:
    """S^{2m-1} with a k-torus action given by a k x m weight matrix."""

    m: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.shape[1] != self.m:
            raise ValueError("weight matrix needs one column per complex coordinate")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def check_point(self, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (2 * self.m,):
            raise ValueError(f"point must be a real vector of length {2 * self.m}")
        if abs(np.linalg.norm(v) - 1.0) > tol:
            raise ValueError("point is not on the unit sphere")
        return v

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        v = rng.normal(size=2 * self.m)
        return v / np.linalg.norm(v)


def reeb_field(sphere: ContactSphere, z: np.ndarray) -> np.ndarray:
    """-i z as a real vector: pairs (y_j, -x_j)."""
    z = sphere.check_point(z)
    out = np.empty_like(z)
    out[0::2] = z[1::2]
    out[1::2] = -z[0::2]
    return out


def eta(sphere: ContactSphere, z: np.ndarray, v: np.ndarray) -> float:
    """Contact form: metric pairing of v with the Reeb vector."""
    return float(np.asarray(v, dtype=float) @ reeb_field(sphere, z))


def d_eta(u: np.ndarray, v: np.ndarray) -> float:
    """Exterior derivative of eta: -2 sum_j (dx_j ^ dy_j)(u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(-2.0 * np.sum(u[0::2] * v[1::2] - u[1::2] * v[0::2]))


def d_eta_fd(sphere: ContactSphere, z: np.ndarray, u: np.ndarray,
             v: np.ndarray, step: float = 1e-5) -> float:
    """Finite-difference cross-check of d_eta via constant extensions."""
    z = np.asarray(z, dtype=float)

    def eta_at(pt, vec):
        reeb = np.empty_like(pt)
        reeb[0::2] = pt[1::2]
        reeb[1::2] = -pt[0::2]
        return float(vec @ reeb)

    du = (eta_at(z + step * u, v) - eta_at(z - step * u, v)) / (2 * step)
    dv = (eta_at(z + step * v, u) - eta_at(z - step * v, u)) / (2 * step)
    return du - dv


def generator_field(sphere: ContactSphere, xi: np.ndarray,
                    z: np.ndarray) -> np.ndarray:
    """Infinitesimal torus action for algebra element xi, as a real vector."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (sphere.k,):
        raise ValueError("xi must have one entry per torus generator")
    w = xi @ sphere.weights
    zc = to_complex(z)
    return to_real(-1j * w * zc)


def contact_momentum(sphere: ContactSphere, z: np.ndarray) -> np.ndarray:
    """J_i(z) = sum_j W[i][j] |z_j|^2."""
    z = sphere.check_point(z)
    u = np.abs(to_complex(z)) ** 2
    return sphere.weights @ u


def torus_element(sphere: ContactSphere, angles: np.ndarray):
    """Finite torus transformation z_j -> exp(-i (W^T angles)_j) z_j."""
    phases = np.exp(-1j * (np.asarray(angles, dtype=float) @ sphere.weights))
    return lambda v: to_real(phases * to_complex(v))


def reeb_flow(z: np.ndarray, t: float) -> np.ndarray:
    return to_real(np.exp(-1j * t) * to_complex(z))


def reeb_invariance_error(sphere: ContactSphere, z: np.ndarray,
                          t_final: float, n_samples: int = 64) -> float:
    """max_t |J(z(t)) - J(z)| along the exact Reeb flow over [0, t_final]."""
    sphere.check_point(z)
    j0 = contact_momentum(sphere, z)
    worst = 0.0
    for t in np.linspace(0.0, t_final, n_samples + 1):
        moved = reeb_flow(z, t)
        worst = max(worst, float(np.abs(contact_momentum(sphere, moved) - j0).max()))
    return worst


def hopf_project(sphere: ContactSphere, z: np.ndarray,
                 tol: float = 1e-12) -> np.ndarray:
    """Representative of the class z ~ exp(i theta) z.

    Rotates the overall phase so the last nonzero complex coordinate is
    real and positive; idempotent, constant on Hopf fibers.
    """
    z = sphere.check_point(z)
    zc = to_complex(z)
    idx = None
    for j in range(sphere.m - 1, -1, -1):
        if abs(zc[j]) > tol:
            idx = j
            break
    if idx is None:
        raise ValueError("zero vector cannot be projected")
    phase = zc[idx] / abs(zc[idx])
    return to_real(zc / phase)


# ---------------------------------------------------------------------------
# cone
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConePoint:
    """A point (z, r) of the symplectic cone S x R^+."""

    sphere: ContactSphere
    base: np.ndarray
    r: float

    def __post_init__(self):
        base = self.sphere.check_point(self.base)
        object.__setattr__(self, "base", base)
        if self.r <= 0:
            raise ValueError("cone radius must be positive")


def cone_momentum(point: ConePoint) -> np.ndarray:
    return point.r * contact_momentum(point.sphere, point.base)


def _split_cone_tangent(point: ConePoint, v: np.ndarray, tol: float = 1e-10):
    v = np.asarray(v, dtype=float)
    if v.shape != (2 * point.sphere.m + 1,):
        raise ValueError("cone tangent vectors have 2m + 1 entries (radial last)")
    vs, vr = v[:-1], float(v[-1])
    if abs(point.base @ vs) > tol:
        raise ValueError("sphere part of a cone tangent must be tangent to S")
    return vs, vr


def cone_form_eval(point: ConePoint, v1: np.ndarray, v2: np.ndarray) -> float:
    """Evaluate d(r^2) ^ eta + r^2 d eta on a pair of cone tangents."""
    u_s, u_r = _split_cone_tangent(point, v1)
    w_s, w_r = _split_cone_tangent(point, v2)
    s = point.sphere
    z, r = point.base, point.r
    term1 = 2.0 * r * (u_r * eta(s, z, w_s) - w_r * eta(s, z, u_s))
    term2 = r * r * d_eta(u_s, w_s)
    return term1 + term2


# ---------------------------------------------------------------------------
# level-set sampling (shared by the cone and Einstein checks)
# ---------------------------------------------------------------------------

def sample_level_set(sphere: ContactSphere, mu: np.ndarray, count: int,
                     seed: int, t_min: float = 1e-8,
                     newton_tol: float = 1e-12, max_rounds: int = 200):
    """Sample sphere points with J(z) on the open ray through mu.

    Rejection sampling with a batched Newton retraction onto the joint
    constraints {off-ray momentum components = 0, |z| = 1}.  Returns
    (points, attempts) where points has shape (count, 2m).
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (sphere.k,):
        raise ValueError("mu must have one entry per torus generator")
    if not np.any(mu):
        raise ValueError("mu = 0: the ray is undefined")
    if count == 0:
        return np.zeros((0, 2 * sphere.m)), 0
    perp = _null_space(mu[None, :])          # (k-1, k)
    cw = perp @ sphere.weights               # (k-1, m)
    mu_norm2 = float(mu @ mu)

    accepted = []
    attempts = 0
    rng = np.random.default_rng(seed)
    batch = max(64, 2 * count)
    for _ in range(max_rounds):
        if sum(a.shape[0] for a in accepted) >= count:
            break
        raw = rng.normal(size=(batch, 2 * sphere.m))
        attempts += batch
        z = to_complex(raw)
        z = z / np.linalg.norm(z, axis=1, keepdims=True)
        ok = _newton_project_batch(z, cw, newton_tol)
        z = z[ok]
        if z.shape[0] == 0:
            continue
        u = np.abs(z) ** 2
        t = (u @ sphere.weights.T) @ mu / mu_norm2
        z = z[t > t_min]
        if z.shape[0]:
            accepted.append(to_real(z))
    total = sum(a.shape[0] for a in accepted)
    if total < count:
        raise SamplingError(
            f"rejection rate too high: {total} accepted of {attempts} attempts"
        )
    points = np.vstack(accepted)[:count]
    return points, attempts


def _newton_project_batch(z: np.ndarray, cw: np.ndarray, tol: float,
                          max_iter: int = 50) -> np.ndarray:
    """In-place batched Newton retraction; returns the convergence mask.

    Constraints per sample: cw @ |z|^2 = 0 and sum |z|^2 = 1.
    """
    rows = np.vstack([cw, np.ones((1, cw.shape[1]))])   # (K, m)
    target = np.zeros(rows.shape[0])
    target[-1] = 1.0
    for _ in range(max_iter):
        u = np.abs(z) ** 2                               # (b, m)
        res = u @ rows.T - target                        # (b, K)
        bad = np.abs(res).max(axis=1) > tol
        if not bad.any():
            break
        # gradients (complex rep): 2 * rows[a, j] * z_j
        gram = 4.0 * np.einsum("aj,bj,sj->sab", rows, rows, u[bad])
        try:
            lam = np.linalg.solve(gram, res[bad][..., None])[..., 0]
        except np.linalg.LinAlgError:
            break  # singular samples count as rejected below
        step = 2.0 * np.einsum("sa,aj,sj->sj", lam, rows, z[bad])
        z[bad] = z[bad] - step
    u = np.abs(z) ** 2
    converged = np.abs(u @ rows.T - target).max(axis=1) <= tol
    # polish the norm exactly; the off-ray residual moves by O(tol)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return converged


# ---------------------------------------------------------------------------
# kernel-phase gauge and the cone compatibility check
# ---------------------------------------------------------------------------

class KernelPhaseGauge:
    """Slice for a kernel circle acting by phases exp(-i w_j theta) on z_j.

    The representative rotates the designated coordinate to be real and
    nonnegative.  A zero weight vector gives the identity gauge (trivial
    kernel group).
    """

    def __init__(self, weight_vector: np.ndarray, designated: int | None = None):
        w = np.asarray(weight_vector, dtype=float)
        self.w = w
        if not np.any(w):
            self.designated = None
        elif designated is not None:
            if w[designated] == 0:
                raise ValueError("designated coordinate has zero kernel weight")
            self.designated = designated
        else:
            self.designated = int(np.argmax(np.abs(w)))

    def _alpha(self, zc: np.ndarray) -> float:
        # fix applies phases exp(-i w alpha): zero out the designated angle
        j = self.designated
        return float(np.angle(zc[j]) / self.w[j])

    def fix(self, z: np.ndarray) -> np.ndarray:
        if self.designated is None:
            return np.asarray(z, dtype=float)
        zc = to_complex(z)
        if abs(zc[self.designated]) <= 1e-12:
            raise ValueError("designated coordinate vanishes (orbifold point)")
        alpha = self._alpha(zc)
        return to_real(np.exp(-1j * self.w * alpha) * zc)

    def differential(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        """d(fix) at z applied to v, both real vectors (exact)."""
        if self.designated is None:
            return np.asarray(v, dtype=float)
        zc = to_complex(z)
        vc = to_complex(v)
        j = self.designated
        if abs(zc[j]) <= 1e-12:
            raise ValueError("designated coordinate vanishes (orbifold point)")
        # d arg(z_j) along v; alpha = arg(z_j) / w_j
        darg = float(np.imag(np.conj(zc[j]) * vc[j]) / np.abs(zc[j]) ** 2)
        dalpha = darg / self.w[j]
        alpha = self._alpha(zc)
        phase = np.exp(-1j * self.w * alpha)
        return to_real(phase * vc + (-1j * self.w * dalpha) * phase * zc)


@dataclass(frozen=True)
class ConeCompatibility:
    """Result of the cone/reduction commutation check."""

    form_error: float
    homogeneity_error: float
    samples: int


def cone_compatibility_error(sphere: ContactSphere, mu: np.ndarray,
                             samples: int, seed: int,
                             kernel_basis: np.ndarray | None = None
                             ) -> ConeCompatibility:
    """Compare the cone form with the cone of the reduced contact space.

    At random points of the lifted ray constraint in the cone, evaluates
    the cone two-form on horizontal tangent pairs and the same form built
    from the reduced contact structure at the gauge-slice image, and
    records the worst discrepancy.  Also checks the r^2 homogeneity of the
    contact-distribution part: values at (z, 2r) must be exactly four
    times the values at (z, r).
    """
    mu = np.asarray(mu, dtype=float)
    if kernel_basis is None:
        from .algebra import abelian, kernel_algebra
        kernel_basis = kernel_algebra(abelian(sphere.k), mu).basis
    kernel_basis = np.atleast_2d(np.asarray(kernel_basis, dtype=float)) \
        if np.asarray(kernel_basis).size else np.zeros((0, sphere.k))
    if kernel_basis.shape[0] > 1:
        raise ValueError("only scenarios with kernel dimension <= 1 are supported")
    if kernel_basis.shape[0] == 1:
        gauge = KernelPhaseGauge(kernel_basis[0] @ sphere.weights)
    else:
        gauge = KernelPhaseGauge(np.zeros(sphere.m))

    points, _ = sample_level_set(sphere, mu, samples, seed)
    rng = np.random.default_rng(seed)
    perp = _null_space(mu[None, :])
    form_err = 0.0
    hom_err = 0.0
    for z in points:
        r = float(np.exp(rng.uniform(-0.7, 0.7)))
        cone_pt = ConePoint(sphere, z, r)
        u = _constraint_tangent(sphere, perp, z, rng.normal(size=2 * sphere.m))
        v = _constraint_tangent(sphere, perp, z, rng.normal(size=2 * sphere.m))
        uh = _remove_kernel_span(sphere, kernel_basis, z, u)
        vh = _remove_kernel_span(sphere, kernel_basis, z, v)
        u_r, v_r = rng.normal(), rng.normal()

        lhs = cone_form_eval(cone_pt, np.append(uh, u_r), np.append(vh, v_r))

        z_fix = gauge.fix(z)
        du = gauge.differential(z, uh)
        dv = gauge.differential(z, vh)
        term1 = 2.0 * r * (u_r * eta(sphere, z_fix, dv)
                           - v_r * eta(sphere, z_fix, du))
        rhs = term1 + r * r * d_eta(du, dv)
        form_err = max(form_err, abs(lhs - rhs))

        # homogeneity on the contact distribution (no radial part, eta = 0)
        reeb = reeb_field(sphere, z)
        uc = uh - eta(sphere, z, uh) * reeb
        vc = vh - eta(sphere, z, vh) * reeb
        base = cone_form_eval(cone_pt, np.append(uc, 0.0), np.append(vc, 0.0))
        if abs(base) > 1e-6:
            doubled = cone_form_eval(ConePoint(sphere, z, 2 * r),
                                     np.append(uc, 0.0), np.append(vc, 0.0))
            hom_err = max(hom_err, abs(doubled / base - 4.0) / 4.0)
    return ConeCompatibility(form_err, hom_err, samples)


def _constraint_tangent(sphere: ContactSphere, perp: np.ndarray, z: np.ndarray,
                        raw: np.ndarray) -> np.ndarray:
    """Project onto {sphere tangent} intersect {off-ray dJ = 0}."""
    zc = to_complex(z)
    rows = [np.asarray(z, dtype=float)]
    for c in perp @ sphere.weights:
        rows.append(to_real(2.0 * c * zc))
    mat = np.vstack(rows)
    q, _ = np.linalg.qr(mat.T)
    return raw - q @ (q.T @ raw)


def _remove_kernel_span(sphere: ContactSphere, kernel_basis: np.ndarray,
                        z: np.ndarray, v: np.ndarray) -> np.ndarray:
    if kernel_basis.shape[0] == 0:
        return v
    gens = np.vstack([generator_field(sphere, kv, z) for kv in kernel_basis])
    coeffs, *_ = np.linalg.lstsq(gens.T, v, rcond=None)
    return v - gens.T @ coeffs
