"""Constancy test for the kernel-generator multivector norm on a ray level set.

The quotient of the round sphere by the kernel circle of mu inherits an
Einstein metric exactly when the pointwise norm of the wedge of the
holomorphic extensions of the kernel-algebra generators is constant on
the level set J^{-1}(R+ mu).  For a torus generator with coordinate
weights w the squared norm of the holomorphic extension is

    sum_j w_j^2 |z_j|^2,

normalized so that the diagonal generator of weight r on the round S^7
has norm |r| on the whole sphere.  Norms of several generators combine
through the Gram determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .algebra import abelian, kernel_algebra
from .errors import InfeasibleLevelSetError
from .spheres import ContactSphere, sample_level_set, to_complex

CONSTANCY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ConstraintSampleSet:
    """Sphere points on the ray level set, plus sampler metadata."""

    points: np.ndarray  # (count, 2m)
    seed: int
    count: int
    attempts: int

    @property
    def rejection_rate(self) -> float:
        if self.attempts == 0:
            return 0.0
        return 1.0 - self.count / self.attempts


@dataclass(frozen=True)
class EinsteinVerdict:
    norm_values: np.ndarray
    relative_std: float
    verdict: str  # "constant" | "non_constant"
    threshold: float

    def as_dict(self) -> dict:
        return {
            "relative_std": self.relative_std,
            "verdict": self.verdict,
            "threshold": self.threshold,
            "samples": int(self.norm_values.size),
        }


def level_set_feasible(sphere: ContactSphere, mu: np.ndarray,
                       t_min: float = 1e-9) -> float:
    """Largest ray parameter t with W u = t mu on the |z|^2 simplex.

    Raises ``InfeasibleLevelSetError`` when the ray misses the momentum
    image (best t <= t_min).
    """
    mu = np.asarray(mu, dtype=float)
    m, k = sphere.m, sphere.k
    # variables (u_1..u_m, t); maximize t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((k + 1, m + 1))
    a_eq[:k, :m] = sphere.weights
    a_eq[:k, -1] = -mu
    a_eq[k, :m] = 1.0
    b_eq = np.zeros(k + 1)
    b_eq[k] = 1.0
    bounds = [(0.0, 1.0)] * m + [(0.0, None)]
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success or -res.fun <= t_min:
        raise InfeasibleLevelSetError(
            f"the ray through {mu.tolist()} does not meet the momentum image"
        )
    return float(-res.fun)


def sample_ray_level(sphere: ContactSphere, mu: np.ndarray, count: int,
                     seed: int) -> ConstraintSampleSet:
    """Rejection + Newton sampling of J^{-1}(R+ mu) on the sphere."""
    mu = np.asarray(mu, dtype=float)
    if count > 0:
        level_set_feasible(sphere, mu)
    points, attempts = sample_level_set(sphere, mu, count, seed)
    return ConstraintSampleSet(points, seed, count, attempts)


def holomorphic_norm_sq(sphere: ContactSphere, xi: np.ndarray,
                        z: np.ndarray) -> float:
    """Squared norm of the holomorphic extension of the xi generator."""
    sphere.check_point(z)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (sphere.k,):
        raise ValueError("xi must have one entry per torus generator")
    w = xi @ sphere.weights
    u = np.abs(to_complex(z)) ** 2
    return float(np.sum(w * w * u))


def multivector_norm(sphere: ContactSphere, basis: np.ndarray,
                     z: np.ndarray) -> float:
    """Gram-determinant norm of the wedge of generator extensions at z.

    An empty basis gives the empty-product value 1.
    """
    sphere.check_point(z)
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.size == 0:
        return 1.0
    u = np.abs(to_complex(z)) ** 2
    wb = basis @ sphere.weights                  # (r, m)
    gram = np.einsum("aj,bj,j->ab", wb, wb, u)
    det = float(np.linalg.det(gram))
    if det < -1e-12:
        raise ArithmeticError(f"Gram determinant negative: {det:.3e}")
    return float(np.sqrt(max(det, 0.0)))


def _multivector_norms_batch(sphere: ContactSphere, basis: np.ndarray,
                             points: np.ndarray) -> np.ndarray:
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.size == 0:
        return np.ones(points.shape[0])
    u = np.abs(to_complex(points)) ** 2          # (s, m)
    wb = basis @ sphere.weights
    gram = np.einsum("aj,bj,sj->sab", wb, wb, u)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None))


def einstein_verdict(sphere: ContactSphere, mu: np.ndarray, count: int,
                     seed: int,
                     threshold: float = CONSTANCY_THRESHOLD) -> EinsteinVerdict:
    """Sample the level set and decide constancy of the multivector norm.

    The kernel algebra is recomputed from mu and the torus dimension, so
    weight-dependent kernels are exercised rather than hard-coded.
    """
    mu = np.asarray(mu, dtype=float)
    basis = kernel_algebra(abelian(sphere.k), mu).basis
    samples = sample_ray_level(sphere, mu, count, seed)
    norms = _multivector_norms_batch(sphere, basis, samples.points)
    mean = float(norms.mean()) if norms.size else 1.0
    rel_std = float(norms.std() / mean) if norms.size and mean != 0 else 0.0
    verdict = "constant" if rel_std <= threshold else "non_constant"
    return EinsteinVerdict(norms, rel_std, verdict, threshold)
