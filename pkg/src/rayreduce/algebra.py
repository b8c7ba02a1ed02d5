"""Linear-algebraic analysis of a finite-dimensional Lie algebra and a covector.

A Lie algebra is given by structure constants ``c[i][j][k]`` meaning
``[e_i, e_j] = sum_k c[i][j][k] e_k`` in a fixed basis.  A covector ``mu``
lives in the dual basis, with pairing ``<mu, xi> = sum_i mu_i xi_i``.

Sign convention, fixed once and used everywhere downstream:

    <ad*_xi mu, eta> := <mu, [xi, eta]>

All isotropy / kernel / ray-isotropy subalgebras are computed as null
spaces with a relative singular-value cutoff of 1e-10.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

RANK_TOL = 1e-10
JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebra:
    """A Lie algebra in a fixed basis: dimension plus structure constants."""

    dim: int
    structure_constants: np.ndarray  # shape (d, d, d)

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (self.dim, self.dim, self.dim):
            raise ValueError(
                f"structure constants have shape {c.shape}, expected "
                f"({self.dim},) * 3"
            )
        object.__setattr__(self, "structure_constants", c)
        if self.dim <= 0:
            raise ValueError("algebra dimension must be positive")
        anti = c + np.swapaxes(c, 0, 1)
        if np.abs(anti).max() > 0:
            raise ValueError("structure constants are not antisymmetric in i, j")
        jac = self._jacobi_defect()
        if jac > JACOBI_TOL:
            raise ValueError(f"Jacobi identity violated by {jac:.3e}")

    def _jacobi_defect(self) -> float:
        c = self.structure_constants
        # [[e_i, e_j], e_k] has coefficients sum_m c[i,j,m] c[m,k,l]
        dbl = np.einsum("ijm,mkl->ijkl", c, c)
        cyc = dbl + np.transpose(dbl, (1, 2, 0, 3)) + np.transpose(dbl, (2, 0, 1, 3))
        return float(np.abs(cyc).max())

    def bracket(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if xi.shape != (self.dim,) or eta.shape != (self.dim,):
            raise ValueError("bracket arguments must have the algebra dimension")
        return np.einsum("i,j,ijk->k", xi, eta, self.structure_constants)


@dataclass(frozen=True)
class Subalgebra:
    """A subspace of the algebra with a tag recording what it is."""

    basis: np.ndarray  # shape (r, d); rows are basis vectors
    tag: str

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def contains(self, other: "Subalgebra", tol: float = RANK_TOL) -> bool:
        """Subspace inclusion other <= self, tested at rank tolerance."""
        if other.dim == 0:
            return True
        if self.dim == 0:
            return False
        stacked = np.vstack([self.basis, other.basis])
        return _rank(stacked, tol) == _rank(self.basis, tol)


def _rank(rows: np.ndarray, tol: float = RANK_TOL) -> int:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        return 0
    s = np.linalg.svd(rows, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _null_space(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Rows spanning the null space of ``mat`` (acting on column vectors)."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    n_cols = mat.shape[1]
    if mat.size == 0 or not np.any(mat):
        return np.eye(n_cols)
    u, s, vt = np.linalg.svd(mat)
    cutoff = tol * s[0] if s.size else 0.0
    rank = int(np.sum(s > cutoff))
    return vt[rank:]


def _check_mu(alg: LieAlgebra, mu: np.ndarray, require_nonzero: bool = False):
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (alg.dim,):
        raise ValueError(
            f"covector has length {mu.shape}, expected ({alg.dim},)"
        )
    if require_nonzero and not np.any(mu):
        raise ValueError("mu = 0: the ray through mu is undefined")
    return mu


def coadjoint(alg: LieAlgebra, xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """ad*_xi mu, i.e. the covector eta |-> <mu, [xi, eta]>."""
    mu = _check_mu(alg, mu)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (alg.dim,):
        raise ValueError("xi must have the algebra dimension")
    # component j: sum_ik xi_i c[i][j][k] mu_k
    return np.einsum("i,ijk,k->j", xi, alg.structure_constants, mu)


def _coadjoint_matrix(alg: LieAlgebra, mu: np.ndarray) -> np.ndarray:
    """Matrix of xi |-> ad*_xi mu; rows index the dual basis, columns xi."""
    return np.einsum("ijk,k->ji", alg.structure_constants, mu)


def isotropy_algebra(alg: LieAlgebra, mu: np.ndarray) -> Subalgebra:
    """Basis of {xi : ad*_xi mu = 0}."""
    mu = _check_mu(alg, mu)
    return Subalgebra(_null_space(_coadjoint_matrix(alg, mu)), "isotropy")


def kernel_algebra(alg: LieAlgebra, mu: np.ndarray) -> Subalgebra:
    """Basis of ker(mu restricted to the isotropy algebra)."""
    mu = _check_mu(alg, mu)
    iso = isotropy_algebra(alg, mu)
    if iso.dim == 0:
        return Subalgebra(np.zeros((0, alg.dim)), "kernel")
    # mu as a linear functional on the isotropy subspace, in its basis
    row = iso.basis @ mu
    coeffs = _null_space(row[None, :])
    return Subalgebra(coeffs @ iso.basis, "kernel")


def ker_mu(alg: LieAlgebra, mu: np.ndarray) -> Subalgebra:
    """Basis of ker mu inside the full algebra."""
    mu = _check_mu(alg, mu, require_nonzero=False)
    return Subalgebra(_null_space(mu[None, :]), "ker_mu")


def ray_isotropy_algebra(alg: LieAlgebra, mu: np.ndarray) -> Subalgebra:
    """Basis of {xi : ad*_xi mu is a real multiple of mu}."""
    mu = _check_mu(alg, mu, require_nonzero=True)
    mat = _coadjoint_matrix(alg, mu)
    # project the output onto the orthogonal complement of span(mu)
    proj = np.eye(alg.dim) - np.outer(mu, mu) / float(mu @ mu)
    return Subalgebra(_null_space(proj @ mat), "ray_isotropy")


@dataclass(frozen=True)
class HypothesisReport:
    """Dimensions and predicates entering the ray-reduction hypotheses."""

    dim_ker_mu: int
    dim_isotropy: int
    dim_kernel_alg: int
    dim_ray_isotropy: int
    sum_condition_holds: bool
    kernel_is_ideal_in_isotropy: bool

    def as_dict(self) -> dict:
        return {
            "dim_ker_mu": self.dim_ker_mu,
            "dim_isotropy": self.dim_isotropy,
            "dim_kernel_alg": self.dim_kernel_alg,
            "dim_ray_isotropy": self.dim_ray_isotropy,
            "sum_condition_holds": self.sum_condition_holds,
            "kernel_is_ideal_in_isotropy": self.kernel_is_ideal_in_isotropy,
        }


def check_reduction_hypotheses(alg: LieAlgebra, mu: np.ndarray) -> HypothesisReport:
    """Evaluate the checkable ray-reduction hypotheses for (alg, mu).

    ``sum_condition_holds`` asks whether ker(mu) + isotropy spans the whole
    algebra; ``kernel_is_ideal_in_isotropy`` whether the kernel algebra is
    stable under bracketing with the isotropy algebra.
    """
    mu = _check_mu(alg, mu, require_nonzero=True)
    kmu = ker_mu(alg, mu)
    iso = isotropy_algebra(alg, mu)
    ker = kernel_algebra(alg, mu)
    ray = ray_isotropy_algebra(alg, mu)

    if iso.dim == 0:
        sum_rank = kmu.dim
    else:
        sum_rank = _rank(np.vstack([kmu.basis, iso.basis]))
    sum_holds = sum_rank == alg.dim

    ideal = True
    for a in iso.basis:
        for b in ker.basis:
            br = alg.bracket(a, b)
            if ker.dim == 0:
                resid = float(np.linalg.norm(br))
            else:
                coeffs, *_ = np.linalg.lstsq(ker.basis.T, br, rcond=None)
                resid = float(np.linalg.norm(ker.basis.T @ coeffs - br))
            if resid > 1e-10:
                ideal = False
    return HypothesisReport(
        dim_ker_mu=kmu.dim,
        dim_isotropy=iso.dim,
        dim_kernel_alg=ker.dim,
        dim_ray_isotropy=ray.dim,
        sum_condition_holds=bool(sum_holds),
        kernel_is_ideal_in_isotropy=ideal,
    )


def cone_orbit_tangent_dim(alg: LieAlgebra, mu: np.ndarray) -> int:
    """Dimension of span{ad*_xi mu : xi} + span{mu}.

    Equals dim(alg) + 1 - dim(ray isotropy algebra).
    """
    mu = _check_mu(alg, mu, require_nonzero=True)
    rows = np.vstack([_coadjoint_matrix(alg, mu).T, mu[None, :]])
    return _rank(rows)


def omega_minus_eval(
    alg: LieAlgebra,
    mu: np.ndarray,
    r: float,
    xi1: np.ndarray,
    r1: float,
    xi2: np.ndarray,
    r2: float,
) -> float:
    """Evaluate the cone-orbit two-form at the base point.

    Arguments (xi, r) parametrize tangent vectors ad*_xi(r mu) + r' (r mu);
    the value is

        -<r mu, [xi1, xi2]> + r2 <r mu, xi1> - r1 <r mu, xi2>,

    which is bilinear and antisymmetric under (xi1, r1) <-> (xi2, r2).
    """
    mu = _check_mu(alg, mu, require_nonzero=True)
    if r <= 0:
        raise ValueError("ray parameter r must be positive")
    rmu = r * mu
    br = alg.bracket(np.asarray(xi1, float), np.asarray(xi2, float))
    return float(-(rmu @ br) + r2 * (rmu @ np.asarray(xi1, float))
                 - r1 * (rmu @ np.asarray(xi2, float)))


# ---------------------------------------------------------------------------
# catalog and file loading
# ---------------------------------------------------------------------------

def _from_brackets(dim: int, entries) -> LieAlgebra:
    """Build an algebra from sparse bracket entries.

    Each entry is ``[i, j, [k, c], [k2, c2], ...]`` with ``i < j`` (0-based),
    declaring ``[e_i, e_j] = sum c e_k``; antisymmetric partners are filled in.
    """
    c = np.zeros((dim, dim, dim))
    for entry in entries:
        if len(entry) < 3:
            raise ValueError(f"bracket entry too short: {entry!r}")
        i, j = int(entry[0]), int(entry[1])
        if not (0 <= i < j < dim):
            raise ValueError(f"bracket entry needs 0 <= i < j < dim, got {entry!r}")
        for pair in entry[2:]:
            k, val = int(pair[0]), float(pair[1])
            if not 0 <= k < dim:
                raise ValueError(f"bracket target index out of range: {entry!r}")
            c[i, j, k] += val
            c[j, i, k] -= val
    return LieAlgebra(dim, c)


def sl2() -> LieAlgebra:
    """sl(2, R) in the (h, e, f) basis: [h,e]=2e, [h,f]=-2f, [e,f]=h."""
    return _from_brackets(3, [[0, 1, [1, 2.0]], [0, 2, [2, -2.0]], [1, 2, [0, 1.0]]])


def so3() -> LieAlgebra:
    """so(3): [e_i, e_j] = eps_ijk e_k."""
    return _from_brackets(3, [[0, 1, [2, 1.0]], [1, 2, [0, 1.0]], [0, 2, [1, -1.0]]])


def abelian(dim: int) -> LieAlgebra:
    return LieAlgebra(dim, np.zeros((dim, dim, dim)))


def heisenberg3() -> LieAlgebra:
    """Heisenberg algebra: [x, y] = z."""
    return _from_brackets(3, [[0, 1, [2, 1.0]]])


def se2() -> LieAlgebra:
    """Euclidean algebra of the plane: [e3,e1]=e2, [e3,e2]=-e1."""
    return _from_brackets(3, [[0, 2, [1, -1.0]], [1, 2, [0, 1.0]]])


def direct_sum(a: LieAlgebra, b: LieAlgebra) -> LieAlgebra:
    d = a.dim + b.dim
    c = np.zeros((d, d, d))
    c[: a.dim, : a.dim, : a.dim] = a.structure_constants
    c[a.dim :, a.dim :, a.dim :] = b.structure_constants
    return LieAlgebra(d, c)


def change_basis(alg: LieAlgebra, s: np.ndarray) -> LieAlgebra:
    """Structure constants in the basis e'_i = sum_j s[i][j] e_j."""
    s = np.asarray(s, dtype=float)
    sinv = np.linalg.inv(s)
    c = np.einsum("ia,jb,abc,cl->ijl", s, s, alg.structure_constants, sinv)
    # restore exact antisymmetry lost to summation-order rounding
    c = 0.5 * (c - np.swapaxes(c, 0, 1))
    return LieAlgebra(alg.dim, c)


def from_catalog(name: str) -> LieAlgebra:
    """Resolve a built-in algebra name: sl2, so3, heisenberg3, se2, abelian:<d>."""
    if name == "sl2":
        return sl2()
    if name == "so3":
        return so3()
    if name == "heisenberg3":
        return heisenberg3()
    if name == "se2":
        return se2()
    if name.startswith("abelian:"):
        return abelian(int(name.split(":", 1)[1]))
    raise ValueError(f"unknown algebra catalog name: {name!r}")


def load_algebra(source: str) -> LieAlgebra:
    """Load an algebra from a catalog name or a JSON file path.

    File schema: ``{"dim": d, "brackets": [[i, j, [k, c], ...], ...]}``.
    """
    try:
        return from_catalog(source)
    except ValueError:
        pass
    with open(source) as fh:
        data = json.load(fh)
    return algebra_from_dict(data)


def algebra_from_dict(data: dict) -> LieAlgebra:
    if "dim" not in data:
        raise ValueError("algebra definition missing 'dim'")
    return _from_brackets(int(data["dim"]), data.get("brackets", []))
