"""Canonical phase space R^{2n} with cotangent-lifted linear symmetries.

Conventions, pinned by the Rayleigh dissipative system:

* one-form theta = sum p_i dq_i, symplectic form omega = sum dq_i ^ dp_i;
* momentum map J^xi = theta(xi_M), i.e. J_i(q, p) = p . (A_i q);
* conformal vector field (qdot, pdot) = (dH/dp, -dH/dq - f p), so that the
  momentum decays as J(t) = exp(-int f) J(0) along the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .algebra import LieAlgebra


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of R^{2n}."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 1 or q.shape != p.shape:
            raise ValueError("q and p must be 1-d arrays of equal length")
        if not (np.isfinite(q).all() and np.isfinite(p).all()):
            raise ValueError("phase point has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_stacked(cls, x: np.ndarray) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        n = x.shape[0] // 2
        return cls(x[:n], x[n:])


class ScalarField:
    """A scalar function on phase space with a gradient.

    ``grad`` returns the pair (dF/dq, dF/dp).  If no analytic gradient is
    supplied, central finite differences with step ``1e-6 * (1 + |x|)``
    are used.
    """

    def __init__(self, evaluate: Callable, gradient: Optional[Callable] = None):
        self._evaluate = evaluate
        self._gradient = gradient

    def __call__(self, x: PhasePoint) -> float:
        return float(self._evaluate(x))

    def grad(self, x: PhasePoint):
        if self._gradient is not None:
            gq, gp = self._gradient(x)
            return np.asarray(gq, float), np.asarray(gp, float)
        return self._fd_grad(x)

    def _fd_grad(self, x: PhasePoint):
        s = x.stacked()
        h = 1e-6 * (1.0 + np.linalg.norm(s))
        g = np.empty_like(s)
        for i in range(s.size):
            sp, sm = s.copy(), s.copy()
            sp[i] += h
            sm[i] -= h
            g[i] = (self._evaluate(PhasePoint.from_stacked(sp))
                    - self._evaluate(PhasePoint.from_stacked(sm))) / (2 * h)
        n = x.n
        return g[:n], g[n:]

    def hessian(self, x: PhasePoint) -> np.ndarray:
        """Second derivative as a (2n, 2n) matrix on stacked coordinates.

        Default: central differences of the gradient.
        """
        s = x.stacked()
        h = 1e-6 * (1.0 + np.linalg.norm(s))
        out = np.empty((s.size, s.size))
        for i in range(s.size):
            sp, sm = s.copy(), s.copy()
            sp[i] += h
            sm[i] -= h
            gp = np.concatenate(self.grad(PhasePoint.from_stacked(sp)))
            gm = np.concatenate(self.grad(PhasePoint.from_stacked(sm)))
            out[:, i] = (gp - gm) / (2 * h)
        return 0.5 * (out + out.T)


class PolynomialField(ScalarField):
    """Polynomial in the 2n phase variables, with exact gradients.

    ``terms`` is a list of (coefficient, exponents) pairs where ``exponents``
    has length 2n and applies to (q_1..q_n, p_1..p_n).
    """

    def __init__(self, n: int, terms: Sequence):
        self.n = n
        self.terms = [(float(c), np.asarray(e, dtype=int)) for c, e in terms]
        for _, e in self.terms:
            if e.shape != (2 * n,) or (e < 0).any():
                raise ValueError("each exponent list must have 2n nonnegative entries")
        super().__init__(self._eval_poly, self._grad_poly)

    def _eval_poly(self, x: PhasePoint) -> float:
        s = x.stacked()
        total = 0.0
        for c, e in self.terms:
            total += c * np.prod(s ** e)
        return total

    def _grad_poly(self, x: PhasePoint):
        s = x.stacked()
        g = np.zeros_like(s)
        for c, e in self.terms:
            for i in np.nonzero(e)[0]:
                e_low = e.copy()
                e_low[i] -= 1
                g[i] += c * e[i] * np.prod(s ** e_low)
        return g[: self.n], g[self.n :]

    def hessian(self, x: PhasePoint) -> np.ndarray:
        s = x.stacked()
        out = np.zeros((s.size, s.size))
        for c, e in self.terms:
            for i in np.nonzero(e)[0]:
                e_i = e.copy()
                e_i[i] -= 1
                for j in np.nonzero(e_i)[0]:
                    e_ij = e_i.copy()
                    e_ij[j] -= 1
                    out[i, j] += c * e[i] * e_i[j] * np.prod(s ** e_ij)
        return out


class QuadraticField(ScalarField):
    """c/2 * |P x|^2 for a coordinate-selection matrix P; exact gradient."""

    def __init__(self, n: int, weights: np.ndarray, factor: float = 1.0):
        # weights: length-2n mask/weight on the stacked (q, p) coordinates
        self.n = n
        self.weights = np.asarray(weights, dtype=float)
        self.factor = float(factor)
        super().__init__(self._eval, self._grad)

    def _eval(self, x: PhasePoint) -> float:
        s = x.stacked()
        return 0.5 * self.factor * float(np.sum(self.weights * s * s))

    def _grad(self, x: PhasePoint):
        s = x.stacked()
        g = self.factor * self.weights * s
        return g[: self.n], g[self.n :]

    def hessian(self, x: PhasePoint) -> np.ndarray:
        return np.diag(self.factor * self.weights)


class ConstantField(ScalarField):
    def __init__(self, value: float):
        self.value = float(value)
        super().__init__(lambda x: self.value,
                         lambda x: (np.zeros(x.n), np.zeros(x.n)))

    def hessian(self, x: PhasePoint) -> np.ndarray:
        return np.zeros((2 * x.n, 2 * x.n))


@dataclass(frozen=True)
class LinearConfigAction:
    """Linear action on configuration space, lifted to the cotangent bundle.

    ``generators`` holds one n x n matrix per Lie-algebra basis element; the
    lifted generator of xi is (A_xi q, -A_xi^T p) with A_xi = sum xi_i A_i.
    """

    generators: tuple
    algebra: Optional[LieAlgebra] = None

    def __post_init__(self):
        gens = tuple(np.asarray(a, dtype=float) for a in self.generators)
        object.__setattr__(self, "generators", gens)
        if gens:
            n = gens[0].shape[0]
            for a in gens:
                if a.shape != (n, n):
                    raise ValueError("all generator matrices must be n x n")
        if self.algebra is not None:
            self._check_closure()

    def _check_closure(self):
        c = self.algebra.structure_constants
        k = len(self.generators)
        if k != self.algebra.dim:
            raise ValueError("one generator matrix per algebra basis element required")
        for i in range(k):
            for j in range(k):
                lhs = self.generators[i] @ self.generators[j] \
                    - self.generators[j] @ self.generators[i]
                rhs = sum(c[i, j, m] * self.generators[m] for m in range(k))
                if np.abs(lhs - rhs).max() > 1e-10:
                    raise ValueError(
                        "generator matrices do not close under commutator "
                        "to match the declared structure constants"
                    )

    @property
    def k(self) -> int:
        return len(self.generators)

    def matrix(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.k,):
            raise ValueError(f"xi must have length {self.k}")
        n = self.generators[0].shape[0] if self.generators else 0
        out = np.zeros((n, n))
        for coef, a in zip(xi, self.generators):
            out += coef * a
        return out

    def group_element(self, angles: np.ndarray):
        """Lifted group transformation exp(A_xi) with xi = angles."""
        a = self.matrix(angles)
        gq = expm(a)
        gp = expm(-a.T)
        return lambda x: PhasePoint(gq @ x.q, gp @ x.p)


def infinitesimal_generator(action: LinearConfigAction, xi: np.ndarray,
                            x: PhasePoint):
    """Cotangent-lifted generator: (A_xi q, -A_xi^T p)."""
    a = action.matrix(xi)
    if a.shape[0] != x.n:
        raise ValueError("action dimension does not match the phase point")
    return a @ x.q, -(a.T @ x.p)


@dataclass(frozen=True)
class ConformalSystem:
    """A conformal Hamiltonian system (H, f) with a linear symmetry action.

    ``constant_f`` is set when f is a constant, enabling the exact-scaling
    split integrator.  H and f are validated to be invariant under the
    action by sampling directional derivatives at construction.
    """

    n: int
    hamiltonian: ScalarField
    conformal_factor: ScalarField
    action: LinearConfigAction
    name: str = "custom"
    constant_f: Optional[float] = None
    separable: bool = False
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            self._check_invariance()

    def _check_invariance(self, samples: int = 20, tol: float = 1e-8):
        rng = np.random.default_rng(1234)
        for _ in range(samples):
            x = PhasePoint(rng.normal(size=self.n), rng.normal(size=self.n))
            for i in range(self.action.k):
                xi = np.zeros(self.action.k)
                xi[i] = 1.0
                dq, dp = infinitesimal_generator(self.action, xi, x)
                for name, field in (("H", self.hamiltonian),
                                    ("f", self.conformal_factor)):
                    gq, gp = field.grad(x)
                    deriv = float(gq @ dq + gp @ dp)
                    if abs(deriv) > tol:
                        raise ValueError(
                            f"{name} is not invariant under generator {i}: "
                            f"directional derivative {deriv:.3e}"
                        )

    @property
    def k(self) -> int:
        return self.action.k


def momentum_map(system: ConformalSystem, x: PhasePoint) -> np.ndarray:
    """J(x) with components J_i = p . (A_i q)."""
    if x.n != system.n:
        raise ValueError("phase point dimension mismatch")
    return np.array([float(x.p @ (a @ x.q)) for a in system.action.generators])


def momentum_differential(system: ConformalSystem, x: PhasePoint) -> np.ndarray:
    """dJ at x as a (k, 2n) matrix acting on stacked tangent vectors."""
    rows = []
    for a in system.action.generators:
        rows.append(np.concatenate([a.T @ x.p, a @ x.q]))
    if not rows:
        return np.zeros((0, 2 * system.n))
    return np.vstack(rows)


def conformal_field(system: ConformalSystem, x: PhasePoint):
    """(qdot, pdot) = (dH/dp, -dH/dq - f(x) p)."""
    gq, gp = system.hamiltonian.grad(x)
    f = system.conformal_factor(x)
    return gp, -gq - f * x.p


def conformal_field_stacked(system: ConformalSystem, s: np.ndarray) -> np.ndarray:
    dq, dp = conformal_field(system, PhasePoint.from_stacked(s))
    return np.concatenate([dq, dp])


def momentum_decay_rate(system: ConformalSystem, x: PhasePoint) -> np.ndarray:
    """Analytic d/dt J along the conformal flow: -f(x) J(x)."""
    return -system.conformal_factor(x) * momentum_map(system, x)


def theta(x: PhasePoint, v: np.ndarray) -> float:
    """Canonical one-form on a stacked tangent vector."""
    v = np.asarray(v, dtype=float)
    return float(x.p @ v[: x.n])


def omega(x_n: int, v: np.ndarray, w: np.ndarray) -> float:
    """Canonical two-form sum dq_i ^ dp_i on stacked tangent vectors."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(v[:x_n] @ w[x_n:] - v[x_n:] @ w[:x_n])
