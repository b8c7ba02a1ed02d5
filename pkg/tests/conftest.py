import numpy as np
import pytest

from rayreduce import PhasePoint, harmonic, rayleigh4
from rayreduce.spheres import ContactSphere

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def rayleigh():
    return rayleigh4()


@pytest.fixture(scope="session")
def s7_unweighted():
    return ContactSphere(4, [[-1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])


@pytest.fixture(scope="session")
def s7_weighted():
    return ContactSphere(4, [[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])


@pytest.fixture(scope="session")
def s3_diagonal():
    return ContactSphere(2, [[1.0, 1.0]])


def rayleigh_family_point(alpha: float, phase: float = 0.0) -> PhasePoint:
    """A relative equilibrium: q2 on a circle of radius alpha, p2 = rot q2."""
    c, s = np.cos(phase), np.sin(phase)
    q2 = alpha * np.array([-s, c])
    p2 = ROT2 @ q2
    return PhasePoint(np.concatenate([[0.0, 0.0], q2]),
                      np.concatenate([[0.0, 0.0], p2]))


def rayleigh_family_distance(x: PhasePoint) -> float:
    """Euclidean distance from the analytic relative-equilibrium family."""
    return float(np.sqrt(np.sum(x.q[:2] ** 2) + np.sum(x.p[:2] ** 2)
                         + np.sum((x.p[2:] - ROT2 @ x.q[2:]) ** 2)))


def constraint_point(rng: np.random.Generator) -> PhasePoint:
    """A generic rayleigh4 point with J_1 = 0 exactly and J_2 > 0."""
    q1 = rng.normal(size=2)
    while np.linalg.norm(q1) < 0.3:             # keep clear of the orbifold
        q1 = rng.normal(size=2)
    p1 = rng.normal() * q1                      # aligned: q1 x p1 = 0
    q2 = rng.normal(size=2)
    while np.linalg.norm(q2) < 0.3:
        q2 = rng.normal(size=2)
    # p2 = c1 rot(q2) + c2 q2 gives q2 x p2 = c1 |q2|^2 > 0
    p2 = rng.uniform(0.3, 2.0) * (ROT2 @ q2) + rng.normal() * q2
    return PhasePoint(np.concatenate([q1, q2]), np.concatenate([p1, p2]))
