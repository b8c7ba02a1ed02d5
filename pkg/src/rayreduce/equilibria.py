"""Relative equilibria of conformal Hamiltonian systems.

A pair (x, xi) is a relative equilibrium when the first-order conditions

    d(J^xi - H)/dq = f(x) p        d(J^xi - H)/dp = 0

hold, equivalently when the conformal field equals the generator field:
X^f_H(x) = xi_M(x).  The solver is Gauss-Newton with Levenberg damping on
the joint variables (x, xi-coefficients), augmented with the ray
constraint that J(x) stay orthogonal to nothing but mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .algebra import abelian, ray_isotropy_algebra
from .errors import RaySignError, SolverError
from .integrate import IntegratorSpec, integrate
from .phase import (
    ConformalSystem,
    PhasePoint,
    infinitesimal_generator,
    momentum_differential,
    momentum_map,
)
from .reduction import RayConstraint


@dataclass(frozen=True)
class RelativeEquilibrium:
    x: PhasePoint
    xi: np.ndarray
    residual: float


def re_residual(system: ConformalSystem, x: PhasePoint,
                xi: np.ndarray) -> np.ndarray:
    """Stacked first-order defect (length 2n); zero iff X^f_H(x) = xi_M(x)."""
    a = system.action.matrix(xi)
    if a.shape[0] != x.n:
        raise ValueError("action dimension mismatch")
    gq, gp = system.hamiltonian.grad(x)
    f = system.conformal_factor(x)
    res_q = a.T @ x.p - gq - f * x.p
    res_p = a @ x.q - gp
    return np.concatenate([res_q, res_p])


def _re_jacobian(system: ConformalSystem, x: PhasePoint, xi: np.ndarray,
                 ray_basis: np.ndarray, constraint: RayConstraint) -> np.ndarray:
    """Analytic Jacobian of (re_residual, off-ray momentum) in (x, coeffs)."""
    n = system.n
    a = system.action.matrix(xi)
    hess_h = system.hamiltonian.hessian(x)
    hess_f = system.conformal_factor.hessian(x)
    gf = np.concatenate(system.conformal_factor.grad(x))
    f = system.conformal_factor(x)

    n_coef = ray_basis.shape[0]
    jac = np.zeros((2 * n + constraint.perp_rows.shape[0], 2 * n + n_coef))
    # d(res_q)/d(q, p)
    jac[:n, : 2 * n] = -hess_h[:n, :] - np.outer(x.p, gf)
    jac[:n, n : 2 * n] += a.T - f * np.eye(n)
    # d(res_p)/d(q, p)
    jac[n : 2 * n, : 2 * n] = -hess_h[n:, :]
    jac[n : 2 * n, :n] += a
    # d/d(xi coefficients)
    for c in range(n_coef):
        a_c = system.action.matrix(ray_basis[c])
        jac[:n, 2 * n + c] = a_c.T @ x.p
        jac[n : 2 * n, 2 * n + c] = a_c @ x.q
    # ray constraint rows
    jac[2 * n :, : 2 * n] = constraint.perp_rows @ momentum_differential(system, x)
    return jac


def solve_re(system: ConformalSystem, mu: np.ndarray, x_init: PhasePoint,
             xi_init: np.ndarray, ray_basis: np.ndarray | None = None,
             tol: float = 1e-10, max_iter: int = 100) -> RelativeEquilibrium:
    """Find a relative equilibrium near an initial guess.

    ``xi`` is parametrized in a basis of the ray isotropy algebra
    (computed from the system's symmetry algebra unless supplied).  The
    objective stacks the first-order conditions with the off-ray momentum
    components.  Levenberg damping handles the solution family's
    degeneracy; the converged point is reported, the family is not
    parametrized.
    """
    mu = np.asarray(mu, dtype=float)
    alg = system.action.algebra or abelian(system.k)
    if ray_basis is None:
        ray_basis = ray_isotropy_algebra(alg, mu).basis
    ray_basis = np.atleast_2d(np.asarray(ray_basis, dtype=float))
    constraint = RayConstraint(system, mu)
    n2 = 2 * system.n
    n_coef = ray_basis.shape[0]

    xi_init = np.asarray(xi_init, dtype=float)
    coef0, *_ = np.linalg.lstsq(ray_basis.T, xi_init, rcond=None)
    z = np.concatenate([x_init.stacked(), coef0])

    def unpack(zv):
        x = PhasePoint.from_stacked(zv[:n2])
        xi = ray_basis.T @ zv[n2:]
        return x, xi

    def objective(zv):
        x, xi = unpack(zv)
        return np.concatenate([re_residual(system, x, xi),
                               constraint.residual(x)])

    def jacobian(zv):
        x, xi = unpack(zv)
        return _re_jacobian(system, x, xi, ray_basis, constraint), objective(zv)

    if np.abs(objective(z)).max() <= tol:
        z = _gauss_newton_polish(objective, jacobian, z)
        x, xi = unpack(z)
        _check_ray_sign(constraint, x)
        return RelativeEquilibrium(x, xi, float(np.abs(objective(z)).max()))

    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        jac, fv = jacobian(z)
        if np.abs(fv).max() <= tol:
            converged = True
            break
        best = float(np.linalg.norm(fv))
        jtj = jac.T @ jac
        jtf = jac.T @ fv
        step_ok = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(jtj.shape[0]), jtf)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            z_new = z - delta
            if np.linalg.norm(objective(z_new)) < best:
                z = z_new
                lam = max(lam / 10, 1e-12)
                step_ok = True
                break
            lam *= 10
        if not step_ok:
            raise SolverError("Levenberg iteration stalled", residual=best)
    if not converged:
        raise SolverError(f"no convergence in {max_iter} iterations",
                          residual=float(np.abs(objective(z)).max()))
    # Undamped minimum-norm Gauss-Newton polish.  The solution set is a
    # family, and the damped iteration can stop on nearly singular
    # directions where the residual is already below tolerance but the
    # iterate is still measurably off the family; keep walking until the
    # correction itself is negligible.
    z = _gauss_newton_polish(objective, jacobian, z)
    x, xi = unpack(z)
    _check_ray_sign(constraint, x)
    xi = _canonical_velocity(system, x, xi)
    return RelativeEquilibrium(x, xi, float(np.abs(objective(np.concatenate(
        [x.stacked(), np.linalg.lstsq(ray_basis.T, xi, rcond=None)[0]]))).max()))


def _gauss_newton_polish(objective, jacobian, z, max_steps: int = 120):
    for _ in range(max_steps):
        jac, fv = jacobian(z)
        delta, *_ = np.linalg.lstsq(jac, fv, rcond=None)
        if np.linalg.norm(delta) <= 1e-14 * (1.0 + np.linalg.norm(z)):
            break
        z_new = z - delta
        if np.linalg.norm(objective(z_new)) > np.linalg.norm(fv):
            break
        z = z_new
    return z


def _canonical_velocity(system: ConformalSystem, x: PhasePoint,
                        xi: np.ndarray) -> np.ndarray:
    """Remove xi components whose generators vanish at x.

    At a relative equilibrium only xi_M(x) is determined; directions in the
    isotropy of x are gauge.  Reporting the minimum-norm representative
    makes the result reproducible and basis independent.
    """
    cols = []
    for i in range(system.k):
        e_i = np.zeros(system.k)
        e_i[i] = 1.0
        dq, dp = infinitesimal_generator(system.action, e_i, x)
        cols.append(np.concatenate([dq, dp]))
    gen = np.array(cols).T                    # (2n, k)
    if gen.size == 0:
        return xi
    u, s, vt = np.linalg.svd(gen)
    cutoff = 1e-8 * (s[0] if s.size and s[0] > 0 else 1.0)
    null_rows = vt[np.sum(s > cutoff):]       # basis of {eta : eta_M(x) = 0}
    for row in null_rows:
        xi = xi - (xi @ row) * row
    return xi


def _check_ray_sign(constraint: RayConstraint, x: PhasePoint):
    t = constraint.t(x)
    if t <= 0:
        raise RaySignError(f"converged to t = {t:.3e} <= 0 (momentum off the ray)")


def verify_re_flow(system: ConformalSystem, re: RelativeEquilibrium,
                   t_final: float, dt: float = 1e-3) -> float:
    """Sup distance between the flow from re.x and the group-orbit curve.

    The orbit curve is exp(t A_xi) on q and exp(-t A_xi^T) on p.
    """
    if t_final == 0:
        return 0.0
    spec = IntegratorSpec("rk4", dt, t_final)
    traj = integrate(system, re.x, spec)
    a = system.action.matrix(re.xi)
    step_q = expm(spec.dt * a)
    step_p = expm(-spec.dt * a.T)
    q, p = re.x.q.copy(), re.x.p.copy()
    worst = 0.0
    for i in range(len(traj)):
        orbit = np.concatenate([q, p])
        worst = max(worst, float(np.abs(traj.states[i] - orbit).max()))
        q = step_q @ q
        p = step_p @ p
    return worst


def relative_periodic_defect(system: ConformalSystem, x: PhasePoint,
                             group_angles: np.ndarray, tau: float,
                             t_final: float, dt: float = 1e-3) -> float:
    """Sup over t of |Phi_{t+tau}(x) - g Phi_t(x)| for a supplied (g, tau).

    This is a verification predicate only; no search over (g, tau) is done.
    """
    spec_long = IntegratorSpec("rk4", dt, t_final + tau)
    traj = integrate(system, x, spec_long)
    g = system.action.group_element(np.asarray(group_angles, dtype=float))
    shift = int(round(tau / dt))
    worst = 0.0
    for i in range(len(traj) - shift):
        # only compare samples exactly tau apart (a trailing partial step
        # breaks uniform spacing)
        if abs(traj.times[i + shift] - traj.times[i] - tau) > 1e-9 * (1 + tau):
            continue
        moved = g(traj.point(i)).stacked()
        worst = max(worst, float(np.abs(traj.states[i + shift] - moved).max()))
    return worst
