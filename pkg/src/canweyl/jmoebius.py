"""J_p geometry of resolvent matrices and their linear-fractional transforms.

A resolvent matrix is a 2p x 2p matrix function W(z) whose kernel
(J_p - W(z) J_p W(zeta)*) / (-i (z - conj zeta)) is nonnegative; its
transform T_W maps Nevanlinna parameters to Herglotz values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConjugateCollision, SingularDenominator
from .herglotz import _hermitian_part
from .linrel import MatrixPair, NevanlinnaFamilySample

COND_LIMIT = 1e12


@dataclass(frozen=True)
class JSignature:
    """The signature matrices J_p = [[0, -iI], [iI, 0]] and the real symplectic J."""

    p: int
    Jp: np.ndarray = field(init=False, repr=False)
    Jcal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.p
        zero = np.zeros((p, p))
        eye = np.eye(p)
        jp = np.block([[zero, -1j * eye], [1j * eye, zero]])
        jc = np.block([[zero, -eye], [eye, zero]])
        jp.setflags(write=False)
        jc.setflags(write=False)
        object.__setattr__(self, "Jp", jp)
        object.__setattr__(self, "Jcal", jc.astype(float))


def jcal(p: int) -> np.ndarray:
    """Real symplectic matrix [[0, -I_p], [I_p, 0]]."""
    return JSignature(p).Jcal


@dataclass(frozen=True)
class ResolventMatrix:
    """A 2p x 2p matrix function of z with J_p-geometry metadata.

    ``eval`` must be safe for concurrent calls; ``deriv`` optionally supplies
    the analytic derivative used by diagonal kernel entries.
    """

    p: int
    eval: Callable[[complex], np.ndarray]
    kind: str = "right"
    domain: str = "C"
    deriv: Callable[[complex], np.ndarray] | None = None

    def __call__(self, z: complex) -> np.ndarray:
        return np.asarray(self.eval(z), dtype=complex)

    def blocks(self, z: complex):
        w = self(z)
        p = self.p
        return w[:p, :p], w[:p, p:], w[p:, :p], w[p:, p:]

    def sharp(self) -> "ResolventMatrix":
        """The matrix function W#(z) = W(conj z)*."""
        kind = {"right": "left", "left": "right"}.get(self.kind, self.kind)
        return ResolventMatrix(
            self.p, lambda z: self(np.conj(z)).conj().T, kind=kind, domain=self.domain)

    @classmethod
    def constant(cls, w, kind="right") -> "ResolventMatrix":
        w = np.asarray(w, dtype=complex)
        return cls(w.shape[0] // 2, lambda z: w, kind=kind)


def kernel_KW(w: ResolventMatrix, z: complex, zeta: complex,
              diag_step: float | None = None) -> np.ndarray:
    """Kernel block (J_p - W(z) J_p W(zeta)*) / (-i (z - conj zeta)).

    Hermitian when zeta = z.  On the singular diagonal z = conj(zeta) with
    z = zeta the limit is taken with the analytic derivative when available,
    otherwise a central difference with step 1e-6 (1 + |z|).
    """
    jp = JSignature(w.p).Jp
    denom = -1j * (z - np.conj(zeta))
    if abs(denom) < 1e-12:
        if abs(z - zeta) > 1e-12:
            raise ConjugateCollision(f"{z} and {zeta} satisfy z = conj(zeta)")
        # Limit kernel -i W'(z) J_p W(z)* at a real J-unitarity point.
        if w.deriv is not None:
            dw = np.asarray(w.deriv(z), dtype=complex)
        else:
            step = diag_step if diag_step is not None else 1e-6 * (1.0 + abs(z))
            dw = (w(z + step) - w(z - step)) / (2 * step)
        return -1j * dw @ jp @ w(z).conj().T
    return (jp - w(z) @ jp @ w(zeta).conj().T) / denom


def certify_class_W(w: ResolventMatrix, nodes) -> tuple[np.ndarray, float]:
    """Gram matrix [K_{zeta_k}(z_j)] over the nodes and its minimal eigenvalue.

    Membership in the nonnegative-kernel class is certified at the nodes iff
    lambda_min >= -1e-8 ||Gram||.
    """
    nodes = [complex(v) for v in nodes]
    m, tp = len(nodes), 2 * w.p
    gram = np.zeros((m * tp, m * tp), dtype=complex)
    for j, zj in enumerate(nodes):
        for k, zk in enumerate(nodes):
            gram[j * tp:(j + 1) * tp, k * tp:(k + 1) * tp] = kernel_KW(w, zj, zk)
    gram = _hermitian_part(gram)
    return gram, float(np.linalg.eigvalsh(gram).min())


def _tau_blocks(tau, z: complex, p: int):
    """Numerator/denominator factors (psi, phi) of a parameter at z.

    Accepts a constant Hermitian matrix (graph parameter), a MatrixPair
    (C, D) -> (psi, phi) = (C*, D*), a NevanlinnaFamilySample, or a callable
    z -> one of these.
    """
    if callable(tau) and not isinstance(tau, (MatrixPair, NevanlinnaFamilySample)):
        tau = tau(z)
    if isinstance(tau, NevanlinnaFamilySample):
        return tau.psi, tau.phi
    if isinstance(tau, MatrixPair):
        return tau.c.conj().T, tau.d.conj().T
    m = np.atleast_2d(np.asarray(tau, dtype=complex))
    if m.shape != (p, p):
        raise ValueError(f"constant parameter must be {p} x {p}")
    return m, np.eye(p, dtype=complex)


def _solve_right(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num @ den^{-1} with a condition guard."""
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularDenominator(
            f"denominator condition number {cond:.3e} exceeds {COND_LIMIT:.0e}", cond=cond)
    return np.linalg.solve(den.T, num.T).T


def lft_right(w: ResolventMatrix, tau, z: complex) -> np.ndarray:
    """Right transform (w11 psi + w12 phi)(w21 psi + w22 phi)^{-1} at z.

    For a constant Hermitian parameter this is (w11 tau + w12)(w21 tau + w22)^{-1};
    multivalued parameters enter in pair form through their (C, D) data.
    """
    w11, w12, w21, w22 = w.blocks(z)
    psi, phi = _tau_blocks(tau, z, w.p)
    return _solve_right(w11 @ psi + w12 @ phi, w21 @ psi + w22 @ phi)


def lft_left(wl: ResolventMatrix, pair, z: complex) -> np.ndarray:
    """Left transform (C w12 + D w22)^{-1}(C w11 + D w21) of a left matrix.

    ``pair`` is a MatrixPair (C, D), a constant Hermitian matrix tau
    (interpreted as (tau, I)), or a callable z -> such data.
    """
    w11, w12, w21, w22 = wl.blocks(z)
    if callable(pair) and not isinstance(pair, (MatrixPair, NevanlinnaFamilySample)):
        pair = pair(z)
    if isinstance(pair, NevanlinnaFamilySample):
        c, d = pair.psi.conj().T, pair.phi.conj().T
    elif isinstance(pair, MatrixPair):
        c, d = pair.c, pair.d
    else:
        c = np.atleast_2d(np.asarray(pair, dtype=complex))
        d = np.eye(wl.p, dtype=complex)
    den = c @ w12 + d @ w22
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularDenominator(
            f"left denominator condition number {cond:.3e}", cond=cond)
    return np.linalg.solve(den, c @ w11 + d @ w21)


def j_unitarity_defect(w: ResolventMatrix, z: complex) -> float:
    """|| W(z) J_p W(conj z)* - J_p ||_2."""
    jp = JSignature(w.p).Jp
    return float(np.linalg.norm(w(z) @ jp @ w(np.conj(z)).conj().T - jp, ord=2))
