"""Built-in conformal Hamiltonian systems.

Catalog keys:

* ``rayleigh4`` -- the dissipative oscillator on R^8 = T*(R^2 x R^2) with
  H = |q|^2/2 + |p|^2/2, f = |q_1|^2 + |p_1|^2 and the torus of independent
  rotations in the two configuration planes;
* ``harmonic:<n>:<k>`` -- H = |q|^2/2 + |p|^2/2 on R^{2n} with constant
  conformal factor k; even coordinate pairs carry planar rotations (n = 1
  gets a single zero generator, i.e. a trivial symmetry);
* ``custom`` -- polynomial H and f supplied as coefficient lists.
"""

from __future__ import annotations

import numpy as np

from .algebra import abelian
from .phase import (
    ConformalSystem,
    ConstantField,
    LinearConfigAction,
    PolynomialField,
    QuadraticField,
)

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _plane_rotation_generators(n: int, planes):
    gens = []
    for (i, j) in planes:
        a = np.zeros((n, n))
        a[i, j] = -1.0
        a[j, i] = 1.0
        gens.append(a)
    return gens


def rayleigh4() -> ConformalSystem:
    n = 4
    h = QuadraticField(n, np.ones(2 * n))
    # f = |q_1|^2 + |p_1|^2 (no 1/2)
    f = QuadraticField(n, np.array([1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]),
                       factor=2.0)
    action = LinearConfigAction(
        tuple(_plane_rotation_generators(n, [(0, 1), (2, 3)])),
        algebra=abelian(2),
    )
    return ConformalSystem(n, h, f, action, name="rayleigh4")


def harmonic(n: int, k: float) -> ConformalSystem:
    h = QuadraticField(n, np.ones(2 * n))
    f = ConstantField(k)
    if n >= 2:
        planes = [(2 * i, 2 * i + 1) for i in range(n // 2)]
        gens = _plane_rotation_generators(n, planes)
    else:
        gens = [np.zeros((1, 1))]
    action = LinearConfigAction(tuple(gens), algebra=abelian(len(gens)))
    return ConformalSystem(n, h, f, action, name=f"harmonic:{n}:{k:g}",
                           constant_f=float(k), separable=True)


def rayleigh4_reduced() -> ConformalSystem:
    """The quotient of ``rayleigh4`` in gauge-slice coordinates.

    Coordinates (q, p) = ((r, q2), (s, p2)) on R^6, where (r, s) is the
    radial pair left from the first plane after dividing out the kernel
    circle.  H keeps its round form and f becomes r^2 + s^2.
    """
    n = 3
    h = QuadraticField(n, np.ones(2 * n))
    # f = r^2 + s^2, the survivors of |q_1|^2 + |p_1|^2 on the slice
    f = QuadraticField(n, np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]), factor=2.0)
    action = LinearConfigAction((np.zeros((3, 3)),), algebra=abelian(1))
    return ConformalSystem(n, h, f, action, name="rayleigh4-reduced")


def custom(n: int, h_terms, f_terms, generators=None) -> ConformalSystem:
    h = PolynomialField(n, h_terms)
    f = PolynomialField(n, f_terms)
    if generators is None:
        gens = (np.zeros((n, n)),)
        action = LinearConfigAction(gens, algebra=abelian(1))
    else:
        gens = tuple(np.asarray(g, dtype=float) for g in generators)
        action = LinearConfigAction(gens, algebra=abelian(len(gens)))
    return ConformalSystem(n, h, f, action, name="custom")


def make_system(key: str) -> ConformalSystem:
    """Resolve a catalog key into a system."""
    if key == "rayleigh4":
        return rayleigh4()
    if key == "rayleigh4-reduced":
        return rayleigh4_reduced()
    if key.startswith("harmonic:"):
        parts = key.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected harmonic:<n>:<k>, got {key!r}")
        return harmonic(int(parts[1]), float(parts[2]))
    raise ValueError(f"unknown system catalog key: {key!r}")
