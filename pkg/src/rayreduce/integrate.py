"""Fixed-step time integration of conformal Hamiltonian systems.

Two methods:

* ``rk4`` -- classical 4th-order Runge-Kutta on the conformal field; the
  running integral of f is carried as an extra quadrature variable updated
  with the same tableau (per step this reduces to a Simpson-type rule over
  the stage values, so the momentum-decay test is limited by the
  integrator's order, not the quadrature's);
* ``conformal_split`` -- for constant f = k and separable quadratic H:
  half-scale / leapfrog / half-scale, where the scaling p <- exp(-k dt/2) p
  is exact.  Each leapfrog sub-step conserves the planar rotation momenta
  exactly, so the momentum ray law holds to rounding.

No step adaptation: fixed steps keep runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError
from .phase import (
    ConformalSystem,
    PhasePoint,
    conformal_field_stacked,
    momentum_map,
)

_METHODS = ("rk4", "conformal_split")


@dataclass(frozen=True)
class IntegratorSpec:
    method: str
    dt: float
    t_final: float

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")

    def step_sizes(self) -> np.ndarray:
        """Steps of dt covering [0, t_final] exactly (short final step if needed)."""
        n_full = int(np.floor(self.t_final / self.dt + 1e-9))
        remainder = self.t_final - n_full * self.dt
        sizes = [self.dt] * n_full
        if remainder > 1e-9 * self.t_final:
            sizes.append(remainder)
        return np.asarray(sizes)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times, stacked states, and cumulative int f dt."""

    times: np.ndarray          # (N,)
    states: np.ndarray         # (N, 2n)
    f_integral: np.ndarray     # (N,)

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.f_integral)):
            raise ValueError("times, states, f_integral must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def point(self, i: int) -> PhasePoint:
        return PhasePoint.from_stacked(self.states[i])

    def __len__(self) -> int:
        return len(self.times)


def _rk4_steps(system: ConformalSystem, x0: PhasePoint,
               step_sizes: np.ndarray) -> Trajectory:
    """Raw rk4 driver.

    ``step_sizes`` may be negative (reversal tests); recorded times are the
    elapsed durations, so they stay increasing either way.
    """
    dim = 2 * system.n
    n_steps = len(step_sizes)

    def rhs(y):
        out = np.empty(dim + 1)
        out[:dim] = conformal_field_stacked(system, y[:dim])
        out[dim] = system.conformal_factor(PhasePoint.from_stacked(y[:dim]))
        return out

    y = np.concatenate([x0.stacked(), [0.0]])
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, dim))
    f_int = np.empty(n_steps + 1)
    times[0], states[0], f_int[0] = 0.0, y[:dim], 0.0
    elapsed = 0.0
    for step, dt in enumerate(step_sizes):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(y).all():
            raise IntegrationError(
                f"non-finite state at step {step + 1}",
                last_valid_time=elapsed,
            )
        elapsed += abs(dt)
        times[step + 1] = elapsed
        states[step + 1] = y[:dim]
        f_int[step + 1] = y[dim]
    return Trajectory(times, states, f_int)


def _split_steps(system: ConformalSystem, x0: PhasePoint,
                 step_sizes: np.ndarray) -> Trajectory:
    if system.constant_f is None:
        raise ValueError("conformal_split requires a constant conformal factor")
    if not system.separable:
        raise ValueError("conformal_split requires a separable catalog system")
    k = system.constant_f
    n = system.n
    n_steps = len(step_sizes)
    q = x0.q.copy()
    p = x0.p.copy()
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, 2 * n))
    times[0] = 0.0
    states[0] = np.concatenate([q, p])
    elapsed = 0.0
    for step, dt in enumerate(step_sizes):
        scale = np.exp(-k * dt / 2.0)
        p = scale * p
        # leapfrog (kick-drift-kick) for X_H; conserves each planar
        # rotation momentum exactly, so the half scalings carry the whole
        # momentum-ray decay
        gq, _ = system.hamiltonian.grad(PhasePoint(q, p))
        p = p - 0.5 * dt * gq
        _, gp = system.hamiltonian.grad(PhasePoint(q, p))
        q = q + dt * gp
        gq, _ = system.hamiltonian.grad(PhasePoint(q, p))
        p = p - 0.5 * dt * gq
        p = scale * p
        state = np.concatenate([q, p])
        if not np.isfinite(state).all():
            raise IntegrationError(
                f"non-finite state at step {step + 1}",
                last_valid_time=elapsed,
            )
        elapsed += dt
        times[step + 1] = elapsed
        states[step + 1] = state
    f_int = k * times
    return Trajectory(times, states, f_int)


def integrate(system: ConformalSystem, x0: PhasePoint,
              spec: IntegratorSpec) -> Trajectory:
    """Integrate the conformal field of ``system`` from ``x0``."""
    if x0.n != system.n:
        raise ValueError("initial point dimension mismatch")
    sizes = spec.step_sizes()
    if spec.method == "rk4":
        return _rk4_steps(system, x0, sizes)
    return _split_steps(system, x0, sizes)


def momentum_history(system: ConformalSystem, traj: Trajectory) -> np.ndarray:
    """J along the trajectory, shape (N, k)."""
    return np.array([momentum_map(system, traj.point(i))
                     for i in range(len(traj))])


def decay_residual(system: ConformalSystem, traj: Trajectory) -> float:
    """Largest normalized violation of J(t) = exp(-int f) J(0).

    Maximum over samples and symmetry generators of
    |J^xi(t) - exp(-F(t)) J^xi(0)| / (1 + |J^xi(0)|) with F the cumulative
    integral of f carried by the trajectory.
    """
    if system.k == 0:
        return 0.0
    j = momentum_history(system, traj)
    predicted = np.exp(-traj.f_integral)[:, None] * j[0][None, :]
    err = np.abs(j - predicted) / (1.0 + np.abs(j[0]))[None, :]
    return float(err.max())


def dissipation_check(system: ConformalSystem, traj: Trajectory) -> float:
    """Largest violation of the energy identity dH/dt = -f (p . dH/dp).

    dH/dt is taken as a centered difference over the samples, so the bound
    scales with dt^2; values are normalized by 1 + |H|.
    """
    n = len(traj)
    if n < 3:
        return 0.0
    h_vals = np.array([system.hamiltonian(traj.point(i)) for i in range(n)])
    worst = 0.0
    for i in range(1, n - 1):
        x = traj.point(i)
        dt2 = traj.times[i + 1] - traj.times[i - 1]
        dh = (h_vals[i + 1] - h_vals[i - 1]) / dt2
        _, gp = system.hamiltonian.grad(x)
        rate = system.conformal_factor(x) * float(x.p @ gp)
        worst = max(worst, abs(dh + rate) / (1.0 + abs(h_vals[i])))
    return worst


def trajectory_rows(system: ConformalSystem, traj: Trajectory):
    """Rows for the trajectory table.

    Columns: t, q1..qn, p1..pn, H, f, J1..Jk, Jpred1..Jpredk, residual.
    """
    j = momentum_history(system, traj)
    j0 = j[0] if system.k else np.zeros(0)
    rows = []
    for i in range(len(traj)):
        x = traj.point(i)
        jpred = np.exp(-traj.f_integral[i]) * j0
        if system.k:
            resid = float(np.max(np.abs(j[i] - jpred) / (1.0 + np.abs(j0))))
        else:
            resid = 0.0
        rows.append(
            [traj.times[i], *x.q, *x.p,
             system.hamiltonian(x), system.conformal_factor(x),
             *j[i], *jpred, resid]
        )
    return rows


def trajectory_header(system: ConformalSystem):
    n, k = system.n, system.k
    cols = ["t"]
    cols += [f"q{i + 1}" for i in range(n)]
    cols += [f"p{i + 1}" for i in range(n)]
    cols += ["H", "f"]
    cols += [f"J{i + 1}" for i in range(k)]
    cols += [f"Jpred{i + 1}" for i in range(k)]
    cols.append("residual")
    return cols


def write_trajectory_csv(path, system: ConformalSystem, traj: Trajectory):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(trajectory_header(system)) + "\n")
        for row in trajectory_rows(system, traj):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
