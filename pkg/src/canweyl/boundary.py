"""Boundary triples of canonical systems: Weyl functions, gamma-fields,
canonical resolvents, resolvent matrices and the limit-point coefficient.

Three triples are supported:

* ``full``        - the 2p-dimensional triple on a regular interval with
                    boundary maps (f(a) + f(b))/sqrt(2), -J (f(a) - f(b))/sqrt(2);
* ``neumann``     - the p-dimensional triple of the extension with the
                    Neumann condition u_2(a) = 0, evaluated at b;
* ``limit-point`` - the scalar triple of a half-line system in the limit
                    point case, evaluated at a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cansys import (CanonicalSystem, FundamentalSolution, QuadratureMesh,
                     Segment, fundamental_at_nodes, fundamental_sharp_at_nodes,
                     generator, monodromy, monodromy_batch, segment_propagator)
from .errors import (NoShrinkage, NotInHalfPlane, NotRegular, SpectralPoint,
                     UnsupportedDimension)
from .jmoebius import COND_LIMIT, ResolventMatrix, jcal

FULL = "full"
NEUMANN = "neumann"
LIMIT_POINT = "limit-point"
KINDS = (FULL, NEUMANN, LIMIT_POINT)

_ALIASES = {
    "full": FULL, "fullregular": FULL, "full_regular": FULL,
    "neumann": NEUMANN, "neumannleft": NEUMANN, "neumann_left": NEUMANN,
    "limit-point": LIMIT_POINT, "limit_point": LIMIT_POINT, "limitpoint": LIMIT_POINT,
}


def normalize_kind(kind: str) -> str:
    try:
        return _ALIASES[kind.replace(" ", "").lower()]
    except KeyError:
        raise ValueError(f"unknown triple kind {kind!r}; expected one of {KINDS}") from None


def _check_kind_system(sys: CanonicalSystem, kind: str) -> str:
    kind = normalize_kind(kind)
    if kind in (FULL, NEUMANN) and not sys.is_regular:
        raise NotRegular(f"triple kind {kind!r} requires a regular right endpoint")
    if kind == LIMIT_POINT:
        if sys.is_regular:
            raise ValueError("limit-point triple requires a half-line system")
        if sys.p != 1:
            raise UnsupportedDimension("limit-point triple is implemented for p = 1")
    return kind


def _solve_right(num, den, what: str):
    """num @ den^{-1} (batched) raising SpectralPoint on an ill-conditioned pencil."""
    cond = np.linalg.cond(den)
    if not np.all(np.isfinite(cond)) or np.max(cond) > COND_LIMIT:
        raise SpectralPoint(f"{what} is singular (cond {np.max(cond):.3e})",
                            cond=float(np.max(cond)))
    return np.swapaxes(np.linalg.solve(np.swapaxes(den, -1, -2),
                                       np.swapaxes(num, -1, -2)), -1, -2)


# ---------------------------------------------------------------------------
# Weyl functions


def weyl_function(sys: CanonicalSystem, kind: str, z):
    """Weyl function of the triple at z (or an array of z).

    full: -J (I - U(z)) (I + U(z))^{-1};  neumann: c1(b,z) c2(b,z)^{-1};
    limit-point: the Weyl-Titchmarsh coefficient m(z).
    """
    kind = _check_kind_system(sys, kind)
    z = np.asarray(z, dtype=complex)
    scalar_in = z.ndim == 0
    zs = np.atleast_1d(z)
    if kind == LIMIT_POINT:
        out = limit_point_m_direct(sys, zs)[..., None, None]
    else:
        u = monodromy_batch(sys, zs)
        n, p = sys.n, sys.p
        eye = np.eye(n)
        if kind == FULL:
            out = _solve_right(-jcal(p) @ (eye - u), eye + u, "I + U(z)")
        else:
            c1, c2 = u[..., :p, :p], u[..., p:, :p]
            out = _solve_right(c1, c2, "c2(b, z)")
    return out[0] if scalar_in else out


def weyl_m_scalar(sys: CanonicalSystem, kind: str, z) -> complex:
    """Scalar convenience wrapper for p = 1 Weyl functions."""
    m = weyl_function(sys, kind, z)
    return complex(m.reshape(-1)[0]) if np.asarray(m).size == 1 else m


def hermitian_shift(sys: CanonicalSystem) -> np.ndarray:
    """The constant K = J Re M(i) J of the full triple's resolvent matrix."""
    m_i = weyl_function(sys, FULL, 1j)
    jc = jcal(sys.p)
    return jc @ (0.5 * (m_i + m_i.conj().T)).real @ jc


# ---------------------------------------------------------------------------
# gamma-fields


def gamma_field(sys: CanonicalSystem, kind: str, z: complex, t: float) -> np.ndarray:
    """Value at time t of the gamma-field of the triple.

    Shapes: (n, n) for full, (n, p) for neumann, (n, 1) for limit-point.
    """
    kind = _check_kind_system(sys, kind)
    z = complex(z)
    fund = FundamentalSolution(sys, z)
    return _gamma_from_fund(sys, kind, z, fund.eval(t))


def _gamma_factors(sys: CanonicalSystem, kind: str, z: complex):
    """(right factor R, column selector) with gamma(t) = U(t, z) R."""
    n, p = sys.n, sys.p
    if kind == FULL:
        u = monodromy(sys, z)
        r = _solve_right(np.sqrt(2.0) * np.eye(n), np.eye(n) + u, "I + U(z)")
        return r
    if kind == NEUMANN:
        u = monodromy(sys, z)
        c2 = u[p:, :p]
        cols = np.eye(n)[:, :p]
        return cols @ _solve_right(np.eye(p), c2, "c2(b, z)")
    m = limit_point_m_direct(sys, np.asarray([z]))[0]
    # y = s - m c: columns of U weighted by (-m, 1).
    return np.asarray([[-m], [1.0]], dtype=complex)


def _gamma_from_fund(sys, kind, z, u_t):
    return u_t @ _gamma_factors(sys, kind, z)


def gamma_at_nodes(sys: CanonicalSystem, kind: str, z: complex,
                   mesh: QuadratureMesh) -> np.ndarray:
    """gamma(z) sampled on the quadrature mesh, shape (N, n, cols).

    For the limit-point triple the mesh lives on a truncation of the
    half-line system; the tail contribution beyond it is the caller's
    truncation error.
    """
    kind = _check_kind_system(sys, kind)
    factor = _gamma_factors(sys, kind, complex(z))
    u = fundamental_at_nodes(mesh.system, complex(z), mesh)
    return u @ factor


def gamma_pair_apply(sys: CanonicalSystem, kind: str, z: complex,
                     f_nodes: np.ndarray, mesh: QuadratureMesh) -> np.ndarray:
    """gamma(conj z)* f, the L^2_H pairing of the adjoint gamma-field."""
    g = gamma_at_nodes(sys, kind, np.conj(complex(z)), mesh)
    hf = mesh.weight_apply(f_nodes)
    return np.einsum("k,knc,kn->c", mesh.weights, g.conj(), hf)


# ---------------------------------------------------------------------------
# canonical resolvents


@dataclass(frozen=True)
class ResolventSample:
    """Resolvent output sampled on a mesh plus its endpoint values."""

    values: np.ndarray
    at_a: np.ndarray
    at_b: np.ndarray


def canonical_resolvent(sys: CanonicalSystem, kind: str, z: complex,
                        f_nodes, mesh: QuadratureMesh) -> ResolventSample:
    """Resolvent of the distinguished selfadjoint extension applied to f.

    full:    g(t) = (1/2) U(t,z) int {sgn(s-t) J - J M(z) J} U#(s,z) H f ds;
    neumann: g(x) = (1/2) U(x,z) int {sgn_+(s-x) I - D(z)} J U#(s,z) H f ds
    with D(z) = [[-I, -2 c2^{-1} s2], [0, I]].

    The output satisfies col{g, f + z g} in the maximal relation and the
    Gamma_0 boundary condition of the triple.
    """
    kind = _check_kind_system(sys, kind)
    if kind == LIMIT_POINT:
        raise UnsupportedDimension("canonical_resolvent covers the regular triples")
    z = complex(z)
    f_nodes = np.asarray(f_nodes, dtype=complex)
    jc = jcal(sys.p)
    usharp = fundamental_sharp_at_nodes(sys, z, mesh)
    # Both kernel terms act on J U#(s, z) H f.
    jphi = np.einsum("ij,kjl,kl->ki", jc, usharp, mesh.weight_apply(f_nodes))
    total = mesh.integrate(jphi)
    sgn_part = total[None, :] - 2.0 * mesh.cumulative(jphi)

    p = sys.p
    if kind == FULL:
        # {sgn J - J M J} U# = {sgn I - J M} (J U#)
        shift = jc @ weyl_function(sys, FULL, z)
    else:
        u = monodromy(sys, z)
        c2, s2 = u[p:, :p], u[p:, p:]
        top_right = -2.0 * _solve_right(np.eye(p), c2, "c2(b, z)") @ s2
        shift = np.block([[-np.eye(p), top_right],
                          [np.zeros((p, p)), np.eye(p)]])
    u_nodes = fundamental_at_nodes(sys, z, mesh)
    kernel = sgn_part - (shift @ total)[None, :]
    values = 0.5 * np.einsum("kij,kj->ki", u_nodes, kernel)
    at_a = 0.5 * (total - shift @ total)
    at_b = 0.5 * monodromy(sys, z) @ (-total - shift @ total)
    return ResolventSample(values, at_a, at_b)


def boundary_map(sys: CanonicalSystem, kind: str, g_a, g_b) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma_0, Gamma_1) of an element with boundary values g(a), g(b)."""
    kind = normalize_kind(kind)
    g_a = np.asarray(g_a, dtype=complex)
    g_b = np.asarray(g_b, dtype=complex)
    p = sys.p
    if kind == FULL:
        jc = jcal(p)
        return (g_a + g_b) / np.sqrt(2.0), -jc @ (g_a - g_b) / np.sqrt(2.0)
    if kind == NEUMANN:
        return g_b[p:], g_b[:p]
    return g_a[p:], -g_a[:p]


def krein_resolvent(sys: CanonicalSystem, kind: str, z: complex, tau,
                    f_nodes, mesh: QuadratureMesh) -> np.ndarray:
    """Resolvent of the extension with parameter tau via the additive formula
    R_tau = R^0 - gamma(z) (M(z) + tau)^{-1} gamma(conj z)*.

    ``tau`` is a constant Hermitian matrix of the triple's parameter size.
    """
    kind = _check_kind_system(sys, kind)
    base = canonical_resolvent(sys, kind, z, f_nodes, mesh)
    m = weyl_function(sys, kind, z)
    tau = np.atleast_2d(np.asarray(tau, dtype=complex))
    den = m + tau
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SpectralPoint(f"M(z) + tau is singular (cond {cond:.3e})", cond=cond)
    coeff = np.linalg.solve(den, gamma_pair_apply(sys, kind, z, f_nodes, mesh))
    gam = gamma_at_nodes(sys, kind, complex(z), mesh)
    return base.values - np.einsum("knc,c->kn", gam, coeff)


# ---------------------------------------------------------------------------
# resolvent matrices


def preresolvent_matrix(sys: CanonicalSystem, z: complex) -> np.ndarray:
    """Preresolvent matrix of the full triple at z:
    [[M(z), 2(I + U#(z))^{-1}], [2(I + U(z))^{-1}, J(-M(z) + Re M(i)) J]].
    """
    _check_kind_system(sys, FULL)
    z = complex(z)
    n = sys.n
    eye = np.eye(n)
    u = monodromy(sys, z)
    usharp = monodromy(sys, np.conj(z)).conj().T
    m = weyl_function(sys, FULL, z)
    jc = jcal(sys.p)
    re_mi = (0.5 * (weyl_function(sys, FULL, 1j) + weyl_function(sys, FULL, 1j).conj().T)).real
    a11 = m
    a12 = 2.0 * _solve_right(eye, eye + usharp, "I + U#(z)")
    a21 = 2.0 * _solve_right(eye, eye + u, "I + U(z)")
    a22 = jc @ (-m + re_mi) @ jc
    return np.block([[a11, a12], [a21, a22]])


def _full_left_matrix(sys: CanonicalSystem):
    k = hermitian_shift(sys)
    n = sys.n
    jc = jcal(sys.p)
    eye = np.eye(n)

    def evaluate(z: complex) -> np.ndarray:
        u = monodromy_batch(sys, np.asarray(z, dtype=complex))
        um, up = u - eye, u + eye
        return 0.5 * np.block([[um @ jc + up @ k, up],
                               [jc @ up @ jc + jc @ um @ k, jc @ um]])

    return evaluate


def _neumann_right_matrix(sys: CanonicalSystem):
    p = sys.p

    def evaluate(z):
        u = monodromy_batch(sys, np.asarray(z, dtype=complex))
        c1, c2 = u[..., :p, :p], u[..., p:, :p]
        s1, s2 = u[..., :p, p:], u[..., p:, p:]
        top = np.concatenate([s2, s1], axis=-1)
        bot = np.concatenate([c2, c1], axis=-1)
        return np.concatenate([top, bot], axis=-2)

    return evaluate


def _limit_point_right_matrix(sys: CanonicalSystem):
    def evaluate(z):
        m = limit_point_m_direct(sys, np.atleast_1d(np.asarray(z, dtype=complex)))
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(zs.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = -1.0
        out[..., 1, 0] = 1.0
        out[..., 1, 1] = m
        return out[0] if np.asarray(z).ndim == 0 else out

    return evaluate


def resolvent_matrix(sys: CanonicalSystem, kind: str) -> ResolventMatrix:
    """The triple's resolvent matrix as a matrix function of z.

    full: the left matrix (1/2)[[(U-I)J + (U+I)K, U+I],
    [J(U+I)J + J(U-I)K, J(U-I)]] with K = J Re M(i) J; neumann: the right
    matrix [[s2, s1], [c2, c1]] (its free Hermitian constant fixed to 0);
    limit-point: the right matrix [[0, -1], [1, m(z)]].
    """
    kind = _check_kind_system(sys, kind)
    if kind == FULL:
        return ResolventMatrix(sys.n, _full_left_matrix(sys), kind="left",
                               domain="rho(A0)")
    if kind == NEUMANN:
        return ResolventMatrix(sys.p, _neumann_right_matrix(sys), kind="right",
                               domain="C")
    return ResolventMatrix(1, _limit_point_right_matrix(sys), kind="right",
                           domain="C \\ R")


# ---------------------------------------------------------------------------
# limit point case


@dataclass(frozen=True)
class WeylDisk:
    """Weyl disk at a point z for a finite truncation of a half-line system."""

    z: complex
    center: complex
    radius: float
    truncation: float


def _disk_from_monodromy(u: np.ndarray) -> tuple[complex, float]:
    """Center/radius of the Moebius image of R u {inf} under the boundary map.

    m(t) = (s1 + t s2) / (c1 + t c2) for the real boundary parameter t.
    """
    c1, c2 = u[0, 0], u[1, 0]
    s1, s2 = u[0, 1], u[1, 1]
    a, b, c, d = s2, s1, c2, c1
    denom = np.conj(c) * d - c * np.conj(d)
    if abs(denom) < 1e-300 or abs(c) < 1e-300:
        return complex(np.inf), np.inf
    center = (b * np.conj(c) - a * np.conj(d)) / denom
    radius = abs(center - a / c)
    return complex(center), float(radius)


def weyl_disk_history(sys: CanonicalSystem, z: complex,
                      max_reps: int = 64) -> list[WeylDisk]:
    """Nested Weyl disks for truncations b + k * tail length, k = 1..max_reps."""
    if sys.is_regular:
        raise ValueError("half-line system required")
    z = complex(z)
    if z.imag == 0:
        raise NotInHalfPlane("Weyl disks need a non-real z")
    tail = sys.tail
    u = monodromy_batch(sys, np.asarray(z, dtype=complex))
    step = segment_propagator(tail, z)
    disks = []
    for k in range(1, max_reps + 1):
        u = step @ u
        center, radius = _disk_from_monodromy(u)
        disks.append(WeylDisk(z, center, radius, sys.b + k * tail.length))
    return disks


def limit_point_m(sys: CanonicalSystem, z: complex, tol: float = 1e-6,
                  max_reps: int = 64) -> tuple[complex, WeylDisk]:
    """Weyl-Titchmarsh coefficient via nested disks; the disk radius certifies
    the error.

    Raises NoShrinkage when the radius stalls above ``tol`` at the maximal
    truncation (a limit-circle-like configuration at this accuracy).
    """
    history = weyl_disk_history(sys, z, max_reps=max_reps)
    for disk in history:
        if disk.radius <= tol:
            return disk.center, disk
    last = history[-1]
    raise NoShrinkage(
        f"disk radius {last.radius:.3e} at truncation {last.truncation:g} "
        f"exceeds tol {tol:g}", radius=last.radius)


def limit_point_m_direct(sys: CanonicalSystem, z_values) -> np.ndarray:
    """m(z) from the decaying eigendirection of the constant tail.

    Exact for mesh-plus-constant-tail systems: the square-integrable solution
    must leave the meshed part along the tail generator's decaying
    eigenvector v, so col{-m, 1} is parallel to U(b, z)^{-1} v.
    """
    if sys.is_regular:
        raise ValueError("half-line system required")
    if sys.p != 1:
        raise UnsupportedDimension("limit-point coefficient needs p = 1")
    z = np.asarray(z_values, dtype=complex)
    scalar_in = z.ndim == 0
    zs = np.atleast_1d(z)
    b = generator(sys.tail, zs)
    d2 = -(b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0])
    d = np.sqrt(d2)
    # decaying eigenvalue mu: Re mu < 0
    mu = np.where(d.real > 0, -d, d)
    osc = (np.abs(mu.real) <= 1e-14 * (1.0 + np.abs(mu))) & (np.abs(d) > 1e-14)
    if np.any(osc & (zs.imag != 0)):
        raise NotInHalfPlane("tail has no decaying direction at a non-real z; "
                             "configuration is not limit point here")
    if np.any(osc):
        raise NotInHalfPlane("limit-point m(z) evaluated at a real z inside "
                             "the essential spectrum")
    # Eigenvector of the 2x2 generator; nilpotent tails use the kernel vector.
    v = np.empty(zs.shape + (2,), dtype=complex)
    nil = np.abs(d) <= 1e-14 * np.maximum(1.0, np.abs(b).max(axis=(-1, -2)))
    row1 = np.stack([b[..., 0, 1], mu - b[..., 0, 0]], axis=-1)
    row2 = np.stack([mu - b[..., 1, 1], b[..., 1, 0]], axis=-1)
    use2 = np.linalg.norm(row2, axis=-1) > np.linalg.norm(row1, axis=-1)
    v = np.where(use2[..., None], row2, row1)
    if np.any(nil):
        # B nilpotent: kernel direction (B11, B21) rotated into null space.
        null = np.stack([-b[..., 0, 1], b[..., 0, 0]], axis=-1)
        alt = np.stack([-b[..., 1, 1], b[..., 1, 0]], axis=-1)
        pick = np.linalg.norm(alt, axis=-1) > np.linalg.norm(null, axis=-1)
        v = np.where((nil & pick)[..., None], alt,
                     np.where(nil[..., None], null, v))
    u_b = monodromy_batch(sys, zs)
    w = np.linalg.solve(u_b, v[..., None])[..., 0]
    m = -w[..., 0] / w[..., 1]
    return m[0] if scalar_in else m


def truncated(sys: CanonicalSystem, reps: int) -> CanonicalSystem:
    """Regular system obtained by appending ``reps`` copies of the tail."""
    if sys.is_regular:
        return sys
    segs = sys.segments + tuple([sys.tail] * int(reps))
    return CanonicalSystem(sys.p, sys.a, segs, "regular", None)


def tail_decay_rate(sys: CanonicalSystem, z: complex) -> float:
    """Per-unit-length decay rate |Re mu| of the tail's L^2 direction."""
    b = generator(sys.tail, np.asarray(complex(z)))
    d2 = -(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])
    return float(abs(np.sqrt(d2).real))


# ---------------------------------------------------------------------------
# generalized Fourier transform kernels


def _limit_point_sharp_m(sys: CanonicalSystem, lam: float, lift: float = 1e-8) -> complex:
    z = complex(lam, lift * (1.0 + abs(lam)))
    return complex(np.conj(limit_point_m_direct(sys, np.asarray([z]))[0]))


def fourier_kernel(sys: CanonicalSystem, kind: str, lam: float,
                   f_nodes, mesh: QuadratureMesh) -> np.ndarray:
    """(F f)(lambda) by per-segment Gauss quadrature of the triple's kernel.

    full: (1/sqrt 2) int U#(s, lam) H f ds; neumann: [I_p 0] of the same
    integral; limit-point: int y#(s, lam) H f ds on the truncated mesh.
    """
    kind = normalize_kind(kind)
    mesh.require_resolves(lam)
    f_nodes = np.asarray(f_nodes, dtype=complex)
    base = mesh.system
    usharp = fundamental_sharp_at_nodes(base, complex(lam), mesh)
    hf = mesh.weight_apply(f_nodes)
    integral = np.einsum("k,kij,kj->i", mesh.weights, usharp, hf)
    p = sys.p
    if kind == FULL:
        return integral / np.sqrt(2.0)
    if kind == NEUMANN:
        return integral[:p]
    m_sharp = _limit_point_sharp_m(sys, float(lam))
    # y# = s# - m# c#; rows of U# are the sharps of the columns of U.
    return integral[p:] - m_sharp * integral[:p]


def fourier_transform(sys: CanonicalSystem, kind: str, lams, f_nodes,
                      mesh: QuadratureMesh) -> np.ndarray:
    """Vector of (F f)(lambda) over an array of real lambda values."""
    lams = np.asarray(lams, dtype=float)
    return np.asarray([fourier_kernel(sys, kind, float(lam), f_nodes, mesh)
                       for lam in lams])
