"""Finite-dimensional linear relations in C^n and Nevanlinna pairs/families.

A linear relation is an arbitrary subspace of C^n x C^n, represented by an
orthonormal column basis.  Stacked vectors col{u, u'} keep the first
component in the top n rows and the second in the bottom n rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficientPair

# Relative singular-value threshold for all rank / subspace decisions.
SUBSPACE_RTOL = 1e-10


def _as_complex_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return a


def orth_basis(a: np.ndarray, rtol: float = SUBSPACE_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``a``, rank-truncated by SVD."""
    a = _as_complex_matrix(a)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def null_basis(a: np.ndarray, rtol: float = SUBSPACE_RTOL) -> np.ndarray:
    """Orthonormal basis of the kernel of ``a``."""
    a = _as_complex_matrix(a)
    m, k = a.shape
    if k == 0:
        return np.zeros((0, 0), dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > rtol * s[0]))
    return vh[rank:].conj().T


def subspace_rank(a: np.ndarray, rtol: float = SUBSPACE_RTOL) -> int:
    a = _as_complex_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def subspaces_equal(a: np.ndarray, b: np.ndarray, rtol: float = SUBSPACE_RTOL) -> bool:
    """Subspace equality via the rank of the concatenated bases.

    Scale-free and basis-independent: span(a) == span(b) iff the concatenation
    has the same rank as each of the factors.
    """
    a, b = _as_complex_matrix(a), _as_complex_matrix(b)
    ra, rb = subspace_rank(a, rtol), subspace_rank(b, rtol)
    if ra != rb:
        return False
    return subspace_rank(np.hstack([a, b]), rtol) == ra


def subspace_contains(big: np.ndarray, small: np.ndarray,
                      rtol: float = SUBSPACE_RTOL) -> bool:
    """True when span(small) is contained in span(big)."""
    big, small = _as_complex_matrix(big), _as_complex_matrix(small)
    return subspace_rank(np.hstack([big, small]), rtol) == subspace_rank(big, rtol)


@dataclass(frozen=True)
class LinearRelation:
    """A subspace of C^n x C^n given by an orthonormal 2n x m column basis."""

    n: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        basis = _as_complex_matrix(self.basis)
        if basis.shape[0] != 2 * self.n:
            raise ValueError(f"basis must have 2n = {2 * self.n} rows, got {basis.shape[0]}")
        basis = orth_basis(basis)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def top(self) -> np.ndarray:
        """First components of the basis vectors."""
        return self.basis[: self.n]

    @property
    def bottom(self) -> np.ndarray:
        """Second components of the basis vectors."""
        return self.basis[self.n:]

    def contains(self, other: "LinearRelation") -> bool:
        return subspace_contains(self.basis, other.basis)

    def equals(self, other: "LinearRelation") -> bool:
        return subspaces_equal(self.basis, other.basis)

    @classmethod
    def from_graph(cls, m) -> "LinearRelation":
        """Graph of a square matrix: {col{u, M u}}."""
        m = _as_complex_matrix(m)
        n = m.shape[0]
        return cls(n, np.vstack([np.eye(n), m]))

    @classmethod
    def from_span(cls, n: int, columns) -> "LinearRelation":
        return cls(n, columns)


def relation_from_kernel_pair(c, d) -> LinearRelation:
    """Relation {col{u, u'} : C u - D u' = 0} of a proper pair (C, D).

    Raises
    ------
    RankDeficientPair
        If rank [C D] < p, in which case the kernel is not p-dimensional.
    """
    c, d = _as_complex_matrix(c), _as_complex_matrix(d)
    p = c.shape[0]
    if d.shape != c.shape:
        raise ValueError("C and D must have equal square shapes")
    if subspace_rank(np.hstack([c, d]).conj().T) < p:
        raise RankDeficientPair(f"rank [C D] = {subspace_rank(np.hstack([c, d]).conj().T)} < p = {p}")
    basis = null_basis(np.hstack([c, -d]))
    return LinearRelation(p, basis)


def relation_parts(t: LinearRelation) -> dict[str, np.ndarray]:
    """Domain, kernel, range and multivalued part of a relation.

    Returns orthonormal bases (n x k arrays) under keys
    ``dom``, ``ker``, ``ran``, ``mul``.
    """
    dom = orth_basis(t.top)
    ran = orth_basis(t.bottom)
    # ker T: elements col{f, 0}; combinations x of basis columns with bottom
    # block zero, then f = top @ x.
    x_ker = null_basis(t.bottom)
    ker = orth_basis(t.top @ x_ker) if x_ker.size else np.zeros((t.n, 0), complex)
    x_mul = null_basis(t.top)
    mul = orth_basis(t.bottom @ x_mul) if x_mul.size else np.zeros((t.n, 0), complex)
    return {"dom": dom, "ker": ker, "ran": ran, "mul": mul}


def adjoint(t: LinearRelation) -> LinearRelation:
    """Adjoint relation T* = {col{u, f} : (f, v) = (u, g) for all col{v, g} in T}.

    col{u, f} lies in T* iff col{f, -u} is orthogonal to T, so T* is the
    flip-with-sign image of the orthogonal complement of T; its dimension is
    2n - dim T.
    """
    n = t.n
    # Orthogonal complement of T inside C^{2n}.
    comp = null_basis(t.basis.conj().T)
    # col{w1, w2} in T-perp  ->  col{u, f} = col{-w2, w1} in T*.
    flipped = np.vstack([-comp[n:], comp[:n]])
    return LinearRelation(n, flipped)


def classify_symmetry(t: LinearRelation) -> str:
    """Classify a relation as 'selfadjoint', 'symmetric' or 'neither'.

    Symmetric means T is contained in T*; selfadjoint means T = T*.  For a
    relation ker [C -D] of a proper pair this reduces to C D* = D C*.
    """
    t_star = adjoint(t)
    if t.dim == t_star.dim and t.equals(t_star):
        return "selfadjoint"
    if t_star.contains(t):
        return "symmetric"
    return "neither"


@dataclass(frozen=True)
class MatrixPair:
    """A constant (C, D) pair; ``proper`` enforces rank [C D] = p."""

    c: np.ndarray
    d: np.ndarray
    proper: bool = True

    def __post_init__(self):
        c, d = _as_complex_matrix(self.c), _as_complex_matrix(self.d)
        if c.shape != d.shape or c.shape[0] != c.shape[1]:
            raise ValueError("C, D must be square matrices of equal shape")
        if self.proper and subspace_rank(np.hstack([c, d]).conj().T) < c.shape[0]:
            raise RankDeficientPair("rank [C D] < p")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.c.shape[0]

    def is_selfadjoint(self, tol: float = 1e-10) -> bool:
        """C D* = D C*, the selfadjointness condition for constant pairs."""
        lhs = self.c @ self.d.conj().T
        rhs = self.d @ self.c.conj().T
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1.0)
        return np.linalg.norm(lhs - rhs) <= tol * scale

    def relation(self) -> LinearRelation:
        return relation_from_kernel_pair(self.c, self.d)


@dataclass(frozen=True)
class NevanlinnaFamilySample:
    """One sample (phi(z), psi(z)) of a Nevanlinna family at a point z.

    The gauge freedom tau ~ (phi chi, psi chi) is fixed by QR-normalizing
    the stacked block col{phi, psi} at the evaluation point.
    """

    phi: np.ndarray
    psi: np.ndarray
    z: complex

    def __post_init__(self):
        phi, psi = _as_complex_matrix(self.phi), _as_complex_matrix(self.psi)
        if phi.shape != psi.shape or phi.shape[0] != phi.shape[1]:
            raise ValueError("phi, psi must be square matrices of equal shape")
        stacked = np.vstack([phi, psi])
        if subspace_rank(stacked) < phi.shape[0]:
            raise ValueError("ker phi(z) and ker psi(z) intersect nontrivially")
        q, _ = np.linalg.qr(stacked)
        p = phi.shape[0]
        phi_n, psi_n = q[:p], q[p:]
        phi_n.setflags(write=False)
        psi_n.setflags(write=False)
        object.__setattr__(self, "phi", phi_n)
        object.__setattr__(self, "psi", psi_n)

    @property
    def p(self) -> int:
        return self.phi.shape[0]

    def relation(self) -> LinearRelation:
        """tau(z) = ran col{phi(z), psi(z)} as a relation in C^p."""
        return LinearRelation(self.p, np.vstack([self.phi, self.psi]))


def pair_from_family(sample_at_conj: NevanlinnaFamilySample) -> MatrixPair:
    """Pair (C(z), D(z)) = (psi(conj z)*, phi(conj z)*) of a family.

    The argument is the family sample taken at conj(z); the returned pair is
    the one valid at z.
    """
    return MatrixPair(sample_at_conj.psi.conj().T, sample_at_conj.phi.conj().T)


def family_from_pair(pair_at_conj: MatrixPair, z: complex) -> NevanlinnaFamilySample:
    """Inverse bridge: family sample (phi, psi)(z) = (D(conj z)*, C(conj z)*)."""
    return NevanlinnaFamilySample(pair_at_conj.d.conj().T, pair_at_conj.c.conj().T, z)
