"""Numerical momentum-ray reduction for catalog scenarios.

The constraint set is { x : J(x) = t mu, t > 0 }.  Quotients by the kernel
circle are realized through explicit gauge slices (a rotation normal form),
never as abstract manifolds; hitting a point where the slice degenerates
(an orbifold point) is an error, not a fallback.

For ``rayleigh4`` with mu = (0, 1) the kernel algebra is span{(1, 0)} --
the circle rotating the first configuration plane -- so the gauge slice
rotates the (q1, p1) block until q1 points along the first axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import abelian, check_reduction_hypotheses, kernel_algebra, _null_space
from .errors import GaugeError, ProjectionError, RaySignError
from .integrate import IntegratorSpec, Trajectory, integrate
from .phase import (
    ConformalSystem,
    PhasePoint,
    infinitesimal_generator,
    momentum_differential,
    momentum_map,
    omega,
)
from .systems import rayleigh4_reduced

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class RayConstraint:
    """The ray level set J^{-1}(R+ mu) of a conformal system."""

    system: ConformalSystem
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.system.k,):
            raise ValueError("mu must have one entry per symmetry generator")
        if not np.any(mu):
            raise ValueError("mu = 0: the ray is undefined")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "_perp", _null_space(mu[None, :]))

    @property
    def perp_rows(self) -> np.ndarray:
        """Orthonormal rows spanning the complement of span(mu)."""
        return self._perp

    def residual(self, x: PhasePoint) -> np.ndarray:
        """Components of J(x) orthogonal to mu."""
        return self._perp @ momentum_map(self.system, x)

    def t(self, x: PhasePoint) -> float:
        """Ray parameter <J(x), mu> / <mu, mu>."""
        j = momentum_map(self.system, x)
        return float(j @ self.mu) / float(self.mu @ self.mu)

    def on_constraint(self, x: PhasePoint, tol: float = 1e-8) -> bool:
        j = momentum_map(self.system, x)
        scale = 1.0 + float(np.linalg.norm(j))
        return (np.abs(self.residual(x)).max(initial=0.0) <= tol * scale
                and self.t(x) > 1e-8)

    def kernel_basis(self) -> np.ndarray:
        alg = self.system.action.algebra
        if alg is None:
            alg = abelian(self.system.k)
        return kernel_algebra(alg, self.mu).basis

    def kernel_generators(self, x: PhasePoint) -> np.ndarray:
        """Stacked generator vectors of the kernel algebra at x, as rows."""
        rows = []
        for kvec in self.kernel_basis():
            dq, dp = infinitesimal_generator(self.system.action, kvec, x)
            rows.append(np.concatenate([dq, dp]))
        if not rows:
            return np.zeros((0, 2 * self.system.n))
        return np.vstack(rows)

    def tangent_project(self, x: PhasePoint, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a stacked vector onto the constraint tangent."""
        dr = self._perp @ momentum_differential(self.system, x)
        if dr.size == 0:
            return np.asarray(v, dtype=float)
        # orthogonal projector onto ker(dr)
        q, _ = np.linalg.qr(dr.T)
        v = np.asarray(v, dtype=float)
        return v - q @ (q.T @ v)

    def horizontal_project(self, x: PhasePoint, v: np.ndarray) -> np.ndarray:
        """Remove the kernel-generator span from a stacked vector (least squares)."""
        gens = self.kernel_generators(x)
        if gens.shape[0] == 0:
            return np.asarray(v, dtype=float)
        coeffs, *_ = np.linalg.lstsq(gens.T, np.asarray(v, float), rcond=None)
        return np.asarray(v, float) - gens.T @ coeffs


def project_to_ray(constraint: RayConstraint, x: PhasePoint,
                   tol: float = 1e-12, max_iter: int = 50) -> PhasePoint:
    """Newton retraction of x onto the constraint set.

    Moves only along the span of the residual gradient (least-norm Newton
    steps).  Raises ``ProjectionError`` after ``max_iter`` iterations and
    ``RaySignError`` if the retracted point has t <= 0.
    """
    s = x.stacked()
    for _ in range(max_iter):
        pt = PhasePoint.from_stacked(s)
        r = constraint.residual(pt)
        j_norm = float(np.linalg.norm(momentum_map(constraint.system, pt)))
        if np.abs(r).max(initial=0.0) <= tol * (1.0 + j_norm):
            t = constraint.t(pt)
            if t <= 0:
                raise RaySignError(f"projection landed on t = {t:.3e} <= 0")
            return pt
        dr = constraint.perp_rows @ momentum_differential(constraint.system, pt)
        try:
            lam = np.linalg.solve(dr @ dr.T, r)
        except np.linalg.LinAlgError as exc:
            raise ProjectionError(f"singular constraint differential: {exc}")
        s = s - dr.T @ lam
    raise ProjectionError(
        f"Newton projection did not converge in {max_iter} iterations "
        f"(residual {np.abs(constraint.residual(PhasePoint.from_stacked(s))).max():.3e})"
    )


def transversality_check(constraint: RayConstraint, x: PhasePoint,
                         sv_tol: float = 1e-8) -> bool:
    """True iff dJ restricted to directions transverse to R mu has full rank.

    Equivalently: the kernel-algebra generators are pointwise independent.
    """
    dr = constraint.perp_rows @ momentum_differential(constraint.system, x)
    if dr.size == 0:
        # no transverse directions requested: a 0-dim condition holds, but a
        # trivial action (all generators zero) can never be transverse
        return constraint.system.k > 0 and bool(
            np.any([np.any(g) for g in constraint.system.action.generators])
        )
    s = np.linalg.svd(dr, compute_uv=False)
    if not np.any([np.any(g) for g in constraint.system.action.generators]):
        return False
    return bool(s.min() > sv_tol * max(1.0, s.max()))


class PlanePairGauge:
    """Slice for a kernel circle rotating one configuration plane.

    The group element rotates (q_i, q_j) and (p_i, p_j) simultaneously; the
    canonical slice puts q's plane angle at zero: q_j = 0, q_i >= 0.
    """

    def __init__(self, i: int = 0, j: int = 1):
        self.i = i
        self.j = j

    def radius(self, x: PhasePoint) -> float:
        return float(np.hypot(x.q[self.i], x.q[self.j]))

    def angle(self, x: PhasePoint) -> float:
        return float(np.arctan2(x.q[self.j], x.q[self.i]))

    def _rotation(self, phi: float, n: int) -> np.ndarray:
        rot = np.eye(n)
        c, s = np.cos(phi), np.sin(phi)
        i, j = self.i, self.j
        rot[i, i] = c
        rot[i, j] = -s
        rot[j, i] = s
        rot[j, j] = c
        return rot

    def fix(self, x: PhasePoint) -> PhasePoint:
        if self.radius(x) <= 1e-12:
            raise GaugeError("slice plane degenerate (orbifold point)")
        rot = self._rotation(-self.angle(x), x.n)
        return PhasePoint(rot @ x.q, rot @ x.p)

    def in_slice(self, x: PhasePoint, tol: float = 1e-10) -> bool:
        return abs(x.q[self.j]) <= tol and x.q[self.i] >= 0

    def differential(self, x: PhasePoint, v: np.ndarray) -> np.ndarray:
        """d(fix) at x applied to a stacked tangent vector (exact)."""
        n = x.n
        r2 = x.q[self.i] ** 2 + x.q[self.j] ** 2
        if r2 <= 1e-24:
            raise GaugeError("slice plane degenerate (orbifold point)")
        v = np.asarray(v, dtype=float)
        dphi = (-x.q[self.j] * v[self.i] + x.q[self.i] * v[self.j]) / r2
        phi = self.angle(x)
        rot = self._rotation(-phi, n)
        spin = np.zeros((n, n))
        spin[self.i, self.j] = -1.0
        spin[self.j, self.i] = 1.0
        # derivative of R(-phi(x)) x along v: R(-phi) v - dphi * spin R(-phi) x
        out = np.empty_like(v)
        out[:n] = rot @ v[:n] - dphi * (spin @ (rot @ x.q))
        out[n:] = rot @ v[n:] - dphi * (spin @ (rot @ x.p))
        return out


@dataclass(frozen=True)
class ReducedState:
    """A gauge-fixed representative of a reduced point, plus the ray parameter."""

    point: PhasePoint
    t: float

    def coords(self) -> np.ndarray:
        """Chart coordinates (r, q2, s, p2) dropping the zeroed slice angle."""
        q, p = self.point.q, self.point.p
        return np.concatenate([[q[0]], q[2:], [p[0]], p[2:]])


@dataclass(frozen=True)
class RayScenario:
    """A catalog reduction scenario: constraint, gauge slice, reduced system."""

    name: str
    constraint: RayConstraint
    gauge: PlanePairGauge
    reduced_system: ConformalSystem


def rayleigh4_scenario(system: ConformalSystem, mu=(0.0, 1.0)) -> RayScenario:
    mu = np.asarray(mu, dtype=float)
    if abs(mu[0]) > 1e-12 or mu[1] <= 0:
        # the catalog reduced system is specific to the ray through (0, 1):
        # its kernel circle rotates the first configuration plane
        raise ValueError("rayleigh4 scenario requires mu on the ray of (0, 1)")
    constraint = RayConstraint(system, mu)
    return RayScenario("rayleigh4", constraint, PlanePairGauge(0, 1),
                       rayleigh4_reduced())


def gauge_fix(scenario: RayScenario, x: PhasePoint,
              check_tol: float = 1e-6) -> ReducedState:
    """Rotate x by the unique kernel-group element into the canonical slice."""
    constraint = scenario.constraint
    if not constraint.on_constraint(x, tol=check_tol):
        raise ValueError("point is not on the ray constraint set")
    fixed = scenario.gauge.fix(x)
    return ReducedState(fixed, constraint.t(x))


def pi_relatedness_error(scenario: RayScenario, x0: PhasePoint,
                         spec: IntegratorSpec) -> float:
    """Sup distance between project-then-flow and flow-then-project.

    Integrates the ambient conformal system from x0, gauge-fixes every
    sample, and compares with the trajectory of the reduced conformal
    system started from the gauge-fixed initial point, in chart
    coordinates.  A gauge failure along the way reports the failure time.
    """
    ambient = scenario.constraint.system
    traj = integrate(ambient, x0, spec)
    reduced0 = gauge_fix(scenario, x0)
    red_traj = integrate(scenario.reduced_system,
                         PhasePoint.from_stacked(reduced0.coords()), spec)
    worst = 0.0
    for i in range(len(traj)):
        try:
            fixed = scenario.gauge.fix(traj.point(i))
        except GaugeError as exc:
            raise GaugeError(str(exc), time=float(traj.times[i]))
        coords = ReducedState(fixed, 0.0).coords()
        worst = max(worst, float(np.abs(coords - red_traj.states[i]).max()))
    return worst


@dataclass(frozen=True)
class PullbackCheck:
    """Result of the reduced-form pullback comparison."""

    form_error: float
    degeneracy_error: float


def reduced_form_pullback_error(scenario: RayScenario, samples: int,
                                seed: int) -> PullbackCheck:
    """Compare omega on constraint tangents with its slice-pushed value.

    At random constraint points and random tangent pairs (v, w), evaluates
    the ambient two-form omega(v, w) against omega on the pushforwards of
    the horizontal parts through the gauge map.  Also records the largest
    pairing of a kernel generator with a tangent vector, which must vanish
    for the quotient form to be well defined.
    """
    constraint = scenario.constraint
    system = constraint.system
    n = system.n
    form_err = 0.0
    degen_err = 0.0
    for s in range(samples):
        rng = np.random.default_rng(seed + s)
        x = _random_constraint_point(constraint, rng)
        v = constraint.tangent_project(x, rng.normal(size=2 * n))
        w = constraint.tangent_project(x, rng.normal(size=2 * n))
        vh = constraint.horizontal_project(x, v)
        wh = constraint.horizontal_project(x, w)
        dv = scenario.gauge.differential(x, vh)
        dw = scenario.gauge.differential(x, wh)
        form_err = max(form_err, abs(omega(n, v, w) - omega(n, dv, dw)))
        for gen in constraint.kernel_generators(x):
            degen_err = max(degen_err, abs(omega(n, gen, v)),
                            abs(omega(n, gen, w)))
    return PullbackCheck(form_err, degen_err)


def _random_constraint_point(constraint: RayConstraint,
                             rng: np.random.Generator) -> PhasePoint:
    """Draw a generic point and retract it onto the constraint (t > 0)."""
    system = constraint.system
    for _ in range(100):
        x = PhasePoint(rng.normal(size=system.n), rng.normal(size=system.n))
        try:
            x = project_to_ray(constraint, x)
        except (RaySignError, ProjectionError):
            continue
        if constraint.t(x) > 1e-3:
            return x
    raise ProjectionError("could not sample a constraint point with t > 0")


def reduction_report(scenario: RayScenario, x0: PhasePoint,
                     spec: IntegratorSpec, samples: int, seed: int) -> dict:
    """Full reduction diagnostics for a catalog scenario."""
    constraint = scenario.constraint
    system = constraint.system
    alg = system.action.algebra or abelian(system.k)
    hyp = check_reduction_hypotheses(alg, constraint.mu)
    ambient = 2 * system.n
    codim = constraint.perp_rows.shape[0]
    kernel_dim = constraint.kernel_basis().shape[0]
    reduced_dim = ambient - codim - kernel_dim
    p = hyp.dim_isotropy
    d = alg.dim
    check = reduced_dim == ambient - p - d + 2
    pullback = reduced_form_pullback_error(scenario, samples, seed)
    pi_err = pi_relatedness_error(scenario, x0, spec)
    return {
        "scenario": scenario.name,
        "mu": [float(v) for v in constraint.mu],
        "dims": {
            "ambient": ambient,
            "constraint_codim": codim,
            "kernel": kernel_dim,
            "reduced": reduced_dim,
            "dimension_formula_holds": bool(check),
        },
        "hypotheses": hyp.as_dict(),
        "pullback_error": pullback.form_error,
        "degeneracy_error": pullback.degeneracy_error,
        "pi_related_error": pi_err,
    }
