"""L-resolvents via linear-fractional parametrization, spectral/pseudo-spectral
functions, admissibility classification, Parseval verification and the
inverse generalized Fourier transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import boundary
from .boundary import (FULL, LIMIT_POINT, NEUMANN, fourier_transform,
                       normalize_kind, resolvent_matrix)
from .cansys import (CanonicalSystem, QuadratureMesh, detect_indivisible,
                     endpoint_indivisible_type, fundamental_at_nodes,
                     monodromy_batch, monodromy_scaled)
from .errors import RankDeficientPair, SingularDenominator
from .herglotz import (DistributionFunction, HerglotzRep, eval_herglotz,
                       stieltjes_invert)
from .jmoebius import COND_LIMIT, jcal

ADMISSIBILITY_Y = tuple(10.0 ** k for k in range(1, 7))


def parameter_size(sys: CanonicalSystem, kind: str) -> int:
    """Size of the Nevanlinna parameter of the triple (n, p or 1)."""
    kind = normalize_kind(kind)
    return {FULL: sys.n, NEUMANN: sys.p, LIMIT_POINT: 1}[kind]


def transform_dim(sys: CanonicalSystem, kind: str) -> int:
    """Dimension of the generalized Fourier transform values."""
    return parameter_size(sys, kind)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class TauParameter:
    """A Nevanlinna parameter: constant relation, Herglotz function or
    constant real boundary pair (A, B).

    Constant relations are stored as proper pairs (C, D) with C D* = D C*;
    boundary pairs satisfy A J A^T = B J B^T and rank [A B] = n.
    """

    form: str
    c: np.ndarray | None = None
    d: np.ndarray | None = None
    rep: HerglotzRep | None = None
    a: np.ndarray | None = field(default=None)
    b: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.form not in ("constant", "herglotz", "boundary_pair"):
            raise ValueError(f"unknown parameter form {self.form!r}")

    @property
    def size(self) -> int:
        if self.form == "constant":
            return self.c.shape[0]
        if self.form == "herglotz":
            return self.rep.p
        return self.a.shape[0]

    def pair_at(self, z) -> tuple[np.ndarray, np.ndarray]:
        """(C(z), D(z)) values; broadcasts over an array of z."""
        z = np.asarray(z, dtype=complex)
        q = self.size
        eye = np.eye(q, dtype=complex)
        if self.form == "constant":
            shape = z.shape + (q, q)
            return np.broadcast_to(self.c, shape), np.broadcast_to(self.d, shape)
        if self.form == "herglotz":
            # tau = graph Q(z): (C, D) = (Q(z), I) by the symmetry Q# = Q.
            vals = eval_herglotz(self.rep, z)
            return vals, np.broadcast_to(eye, z.shape + (q, q))
        c = 0.5 * (self.a + self.b)
        d = 0.5 * (self.a - self.b) @ jcal(q // 2)
        shape = z.shape + (q, q)
        return (np.broadcast_to(c.astype(complex), shape),
                np.broadcast_to(d.astype(complex), shape))

    def describe(self) -> str:
        return {"constant": "constant relation (C, D)",
                "herglotz": "Herglotz-function parameter",
                "boundary_pair": "boundary pair (A, B)"}[self.form]


def tau_relation(c, d) -> TauParameter:
    """Constant selfadjoint relation ker [C -D]; requires C D* = D C*."""
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    d = np.atleast_2d(np.asarray(d, dtype=complex))
    p = c.shape[0]
    if np.linalg.matrix_rank(np.hstack([c, d]), tol=1e-10) < p:
        raise RankDeficientPair("rank [C D] < p")
    lhs, rhs = c @ d.conj().T, d @ c.conj().T
    if np.linalg.norm(lhs - rhs) > 1e-10 * max(1.0, np.linalg.norm(lhs)):
        raise ValueError("pair is not selfadjoint: C D* != D C*")
    return TauParameter("constant", c=c, d=d)


def tau_constant(q) -> TauParameter:
    """Graph of a constant Hermitian matrix."""
    q = np.atleast_2d(np.asarray(q, dtype=complex))
    if np.linalg.norm(q - q.conj().T) > 1e-10 * max(1.0, np.linalg.norm(q)):
        raise ValueError("constant parameter must be Hermitian")
    return tau_relation(q, np.eye(q.shape[0]))


def tau_zero(p: int) -> TauParameter:
    return tau_constant(np.zeros((p, p)))


def tau_mul(p: int) -> TauParameter:
    """The purely multivalued relation {0} x C^p, as the pair (I, 0)."""
    return tau_relation(np.eye(p), np.zeros((p, p)))


def tau_herglotz(rep: HerglotzRep) -> TauParameter:
    return TauParameter("herglotz", rep=rep)


def tau_boundary_pair(a, b) -> TauParameter:
    """Constant real boundary pair: A f(a) + B f(b) = 0.

    Requires A J A^T = B J B^T and rank [A B] = n (the selfadjointness and
    properness conditions for constant real pairs).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n, n) or n % 2:
        raise ValueError("A, B must be equal even-size square matrices")
    jc = jcal(n // 2)
    lhs, rhs = a @ jc @ a.T, b @ jc @ b.T
    if np.linalg.norm(lhs - rhs) > 1e-10 * max(1.0, np.linalg.norm(lhs), np.linalg.norm(rhs)):
        raise ValueError("boundary pair violates A J A^T = B J B^T")
    if np.linalg.matrix_rank(np.hstack([a, b]), tol=1e-10) < n:
        raise RankDeficientPair("rank [A B] < n")
    return TauParameter("boundary_pair", a=a, b=b)


def as_tau(obj, p: int) -> TauParameter:
    """Coerce a matrix / pair / TauParameter into a TauParameter of size p."""
    if isinstance(obj, TauParameter):
        tau = obj
    elif isinstance(obj, HerglotzRep):
        tau = tau_herglotz(obj)
    else:
        tau = tau_constant(np.asarray(obj, dtype=complex))
    if tau.size != p:
        raise ValueError(f"parameter size {tau.size} does not match triple size {p}")
    return tau


# ---------------------------------------------------------------------------
# L-resolvents


def _batched_right_div(num, den, what="denominator"):
    cond = np.linalg.cond(den)
    if not np.all(np.isfinite(cond)) or np.max(cond) > COND_LIMIT:
        raise SingularDenominator(
            f"{what} condition number {np.max(cond):.3e}", cond=float(np.max(cond)))
    return np.swapaxes(np.linalg.solve(np.swapaxes(den, -1, -2),
                                       np.swapaxes(num, -1, -2)), -1, -2)


def l_resolvent(sys: CanonicalSystem, kind: str, tau, z):
    """L-resolvent value r(z) = T_W[tau](z); broadcasts over arrays of z.

    The transform uses the triple's natural resolvent matrix: the left
    matrix with the left transform for the full triple, the right matrix
    with the right transform otherwise.  All routes produce Herglotz
    functions of z for admissible parameters.
    """
    kind = normalize_kind(kind)
    w = resolvent_matrix(sys, kind)
    q = w.p
    tau = as_tau(tau, q)
    z = np.asarray(z, dtype=complex)
    scalar_in = z.ndim == 0
    zs = np.atleast_1d(z)
    wv = np.asarray(w.eval(zs), dtype=complex)
    w11, w12 = wv[..., :q, :q], wv[..., :q, q:]
    w21, w22 = wv[..., q:, :q], wv[..., q:, q:]
    c, d = tau.pair_at(zs)
    if w.kind == "left":
        # (C w12 + D w22)^{-1} (C w11 + D w21)
        den = c @ w12 + d @ w22
        num = c @ w11 + d @ w21
        cond = np.linalg.cond(den)
        if not np.all(np.isfinite(cond)) or np.max(cond) > COND_LIMIT:
            raise SingularDenominator(
                f"left denominator condition {np.max(cond):.3e}",
                cond=float(np.max(cond)))
        out = np.linalg.solve(den, num)
    else:
        # (w11 psi + w12 phi)(w21 psi + w22 phi)^{-1}, (psi, phi) = (C*, D*)
        psi = np.swapaxes(c, -1, -2).conj()
        phi = np.swapaxes(d, -1, -2).conj()
        out = _batched_right_div(w11 @ psi + w12 @ phi, w21 @ psi + w22 @ phi)
    return out[0] if scalar_in else out


def l_resolvent_ab(sys: CanonicalSystem, tau: TauParameter, z):
    """Boundary-pair route for the full triple:
    r(z) = (A + B U(z))^{-1} [ (B U(z) - A) J + (A + B) K ],  K = J Re M(i) J.

    Expanding the left transform in (A, B) coordinates produces this form;
    it reduces to the additive constant K/2 when K commutes through
    (A + B U(z))^{-1} (A + B), and exactly agrees with the left-transform
    route for every z.
    """
    if tau.form != "boundary_pair":
        raise ValueError("the boundary route needs a boundary_pair parameter")
    z = np.asarray(z, dtype=complex)
    scalar_in = z.ndim == 0
    zs = np.atleast_1d(z)
    from .cansys import monodromy_batch

    u = monodromy_batch(sys, zs)
    a, b = tau.a.astype(complex), tau.b.astype(complex)
    k = boundary.hermitian_shift(sys)
    jc = jcal(sys.p)
    den = a + b @ u
    cond = np.linalg.cond(den)
    if not np.all(np.isfinite(cond)) or np.max(cond) > COND_LIMIT:
        raise SingularDenominator(
            f"A + B U(z) condition {np.max(cond):.3e}", cond=float(np.max(cond)))
    num = (b @ u - a) @ jc + np.broadcast_to((a + b) @ k, den.shape)
    out = np.linalg.solve(den, num)
    return out[0] if scalar_in else out


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    """Three-valued verdict on a parameter with the sampled decay evidence."""

    verdict: str
    criterion: str
    samples: tuple

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "criterion": self.criterion,
                "samples": [[y, ratio] for y, ratio in self.samples]}


def _verdict_from_ratios(ratios) -> str:
    finite = [r for r in ratios if np.isfinite(r)]
    if len(finite) < len(ratios):
        return "inadmissible"
    tail = ratios[-4:]
    decreasing = all(tail[i + 1] < tail[i] for i in range(len(tail) - 1))
    if decreasing and ratios[-1] < 1e-3:
        return "admissible"
    if ratios[-1] >= 1e-3 and ratios[-1] >= 0.999 * ratios[-2]:
        return "inadmissible"
    return "indeterminate"


def admissibility_test(sys: CanonicalSystem, kind: str, tau,
                       y_grid=ADMISSIBILITY_Y) -> AdmissibilityReport:
    """Classify a parameter by the applicable o(y) criterion along iy.

    full: the boundary-pair criteria on (I +/- U(iy)) (A + B U(iy))^{-1}
    sides; neumann / limit-point at p = 1: dispatch on the type of the
    H-indivisible interval abutting the relevant endpoint (none: always
    admissible; type pi/2: tau(iy) = o(y); type psi: the rotated fraction).
    """
    kind = normalize_kind(kind)
    ys = np.asarray(list(y_grid), dtype=float)
    if kind == FULL:
        tau = as_tau(tau, sys.n)
        return _admissibility_full(sys, tau, ys)
    tau = as_tau(tau, parameter_size(sys, kind))
    endpoint = "right" if kind == NEUMANN else "left"
    if sys.p != 1:
        return _admissibility_general(sys, kind, tau, ys)
    psi = endpoint_indivisible_type(sys, endpoint)
    if psi is None:
        samples = tuple((float(y), 0.0) for y in ys)
        return AdmissibilityReport(
            "admissible", f"no H-indivisible interval at the {endpoint} endpoint",
            samples)
    if abs(psi - np.pi / 2) <= 1e-9:
        criterion = "tau(iy) = o(y) (endpoint type pi/2)"
        sin_c, cos_c = 1.0, 0.0
    else:
        criterion = (f"(sin psi tau + cos psi)(-cos psi tau + sin psi)^{{-1}} = o(y), "
                     f"psi = {psi:.6g}")
        sin_c, cos_c = np.sin(psi), np.cos(psi)
    ratios, samples = [], []
    for y in ys:
        c, d = tau.pair_at(np.asarray(complex(0.0, y)))
        num = sin_c * c + cos_c * d
        den = -cos_c * c + sin_c * d
        try:
            val = _batched_right_div(num, den, what="admissibility fraction")
            ratio = float(np.linalg.norm(val) / y)
        except SingularDenominator:
            ratio = np.inf
        ratios.append(ratio)
        samples.append((float(y), ratio))
    return AdmissibilityReport(_verdict_from_ratios(ratios), criterion, tuple(samples))


def _admissibility_general(sys: CanonicalSystem, kind: str, tau: TauParameter,
                           ys: np.ndarray) -> AdmissibilityReport:
    """Fallback for p > 1: (M + tau)^{-1} = o(y), (M^{-1} + tau^{-1})^{-1} = o(y).

    Requires the parameter to act as a matrix function (graph form); purely
    multivalued constant relations are reported indeterminate here.
    """
    ratios, samples = [], []
    for y in ys:
        z = complex(0.0, y)
        c, d = tau.pair_at(np.asarray(z))
        if np.linalg.cond(d) > COND_LIMIT:
            return AdmissibilityReport(
                "indeterminate",
                "p > 1 multivalued constant parameter: no matrix-function form",
                tuple())
        tval = np.linalg.solve(d, c)
        # M(iy) from growth-split monodromy blocks; the scale cancels in the ratio.
        uh, _ = monodromy_scaled(sys, np.asarray(z))
        p = sys.p
        try:
            m = np.linalg.solve(uh[p:, :p].T, uh[:p, :p].T).T
            e1 = np.linalg.norm(np.linalg.inv(m + tval))
            e2 = np.linalg.norm(np.linalg.inv(np.linalg.inv(m) + np.linalg.inv(tval)))
        except np.linalg.LinAlgError:
            e1 = e2 = np.inf
        ratio = float(max(e1, e2) / y)
        ratios.append(ratio)
        samples.append((float(y), ratio))
    return AdmissibilityReport(
        _verdict_from_ratios(ratios),
        "(M(iy) + tau(iy))^{-1} = o(y) and (M(iy)^{-1} + tau(iy)^{-1})^{-1} = o(y)",
        tuple(samples))


def _admissibility_full(sys: CanonicalSystem, tau: TauParameter,
                        ys: np.ndarray) -> AdmissibilityReport:
    if tau.form == "boundary_pair":
        a_of = lambda z: (tau.a.astype(complex), tau.b.astype(complex))
    else:
        jc = jcal(sys.p)

        def a_of(z):
            c, d = tau.pair_at(np.asarray(z))
            return c - d @ jc, c + d @ jc

    eye = np.eye(sys.n)
    ratios, samples = [], []
    for y in ys:
        z = complex(0.0, y)
        uh, rho = monodromy_scaled(sys, np.asarray(z))
        es = np.exp(-rho)      # e^{-rho} underflows harmlessly to 0 for huge y
        a, b = a_of(z)
        den = es * a + b @ uh
        try:
            inv_den = np.linalg.inv(den)
        except np.linalg.LinAlgError:
            ratios.append(np.inf)
            samples.append((float(y), np.inf))
            continue
        e1 = np.linalg.norm((es * eye + uh) @ inv_den @ (a - b))
        e2 = np.linalg.norm((es * eye - uh) @ inv_den @ (a + b))
        ratio = float(max(e1, e2) / y)
        ratios.append(ratio)
        samples.append((float(y), ratio))
    return AdmissibilityReport(
        _verdict_from_ratios(ratios),
        "(I + U)(A + BU)^{-1}(A - B) = o(y) and (I - U)(A + BU)^{-1}(A + B) = o(y)",
        tuple(samples))


# ---------------------------------------------------------------------------
# spectral functions


def spectral_function(sys: CanonicalSystem, kind: str, tau, window,
                      grid_step: float = 2e-3, eps_seq=None,
                      min_jump: float = 1.0,
                      density_floor: float = 0.0,
                      label: str = "") -> DistributionFunction:
    """sigma over the window by Stieltjes inversion of z -> r(z).

    The additive Hermitian constants of the parametrization do not affect
    increments; sigma is normalized with sigma(0) = 0.  ``density_floor``
    zeroes a.c. density samples whose trace falls below the given absolute
    level (useful when sigma is known to be purely atomic).
    """
    kind = normalize_kind(kind)
    q = resolvent_matrix(sys, kind).p
    tau = as_tau(tau, q)

    def r(z):
        return l_resolvent(sys, kind, tau, z)

    kwargs = {}
    if eps_seq is not None:
        kwargs["eps_seq"] = eps_seq
    dist = stieltjes_invert(r, window, grid_step=grid_step, min_jump=min_jump,
                            label=label or f"{kind} triple, {tau.describe()}",
                            **kwargs)
    if density_floor > 0.0 and dist.ac_density is not None:
        rho = dist.ac_density.copy()
        tr = np.trace(rho, axis1=1, axis2=2).real
        rho[tr < density_floor] = 0.0
        dist = DistributionFunction(dist.p, dist.breakpoints, dist.jump_weights,
                                    dist.ac_grid, rho, dist.label)
    return dist


def _mul_projected(sys: CanonicalSystem, f_nodes: np.ndarray,
                   mesh: QuadratureMesh) -> np.ndarray:
    """Project out the multivalued-part directions over endpoint-indivisible runs.

    On such a run H = xi xi*, and the L^2_H classes supported there span the
    kernel of the Fourier map; removing them makes Parseval exact for
    pseudo-spectral sigma.
    """
    if sys.p != 1:
        return f_nodes
    from .cansys import detect_indivisible

    runs = [r for r in detect_indivisible(sys) if r.abuts_left or r.abuts_right]
    if not runs:
        return f_nodes
    out = np.array(f_nodes, dtype=complex, copy=True)
    for run in runs:
        xi = np.array([np.cos(run.psi), np.sin(run.psi)])
        inside = (mesh.nodes >= run.t0 - 1e-12) & (mesh.nodes <= run.t1 + 1e-12)
        coef = out[inside] @ xi
        out[inside] -= np.outer(coef, xi)
    return out


def parseval_check(sys: CanonicalSystem, kind: str,
                   sigma: DistributionFunction, f_nodes, g_nodes,
                   mesh: QuadratureMesh) -> float:
    """Relative defect |<f, g>_H - int G* dsigma F| / |<f, g>_H|.

    A small defect certifies that sigma acts as a pseudo-spectral function
    on this pair; test functions are first projected off the flagged
    endpoint-indivisible directions.
    """
    kind = normalize_kind(kind)
    dim = transform_dim(sys, kind)
    f_nodes = _mul_projected(sys, np.asarray(f_nodes, dtype=complex), mesh)
    g_nodes = _mul_projected(sys, np.asarray(g_nodes, dtype=complex), mesh)
    lhs = mesh.pairing(f_nodes, g_nodes)
    f_atoms = fourier_transform(sys, kind, sigma.breakpoints, f_nodes, mesh)
    g_atoms = fourier_transform(sys, kind, sigma.breakpoints, g_nodes, mesh)
    f_atoms = f_atoms.reshape(sigma.breakpoints.size, dim)
    g_atoms = g_atoms.reshape(sigma.breakpoints.size, dim)
    f_ac = g_ac = None
    if sigma.ac_grid is not None and sigma.ac_density is not None:
        live = np.trace(sigma.ac_density, axis1=1, axis2=2).real > 1e-15
        if np.any(live):
            f_ac = np.zeros((sigma.ac_grid.size, dim), dtype=complex)
            g_ac = np.zeros_like(f_ac)
            f_ac[live] = fourier_transform(sys, kind, sigma.ac_grid[live], f_nodes, mesh)
            g_ac[live] = fourier_transform(sys, kind, sigma.ac_grid[live], g_nodes, mesh)
    rhs = sigma.integrate_bilinear(f_atoms, g_atoms, f_ac, g_ac)
    denom = abs(lhs)
    if denom == 0.0:
        return float(abs(rhs))
    return float(abs(lhs - rhs) / denom)


def inverse_fourier(sys: CanonicalSystem, kind: str,
                    sigma: DistributionFunction, f_atoms,
                    mesh: QuadratureMesh, f_ac=None) -> np.ndarray:
    """f(x) = int kernel(x, lambda) dsigma(lambda) F(lambda), sampled on the mesh.

    ``f_atoms`` holds F at the breakpoints of sigma; ``f_ac`` optionally at
    its a.c. grid.  Kernels: (1/sqrt 2) U(x, lam) for the full triple,
    c(x, lam) for neumann, y(x, lam) for limit-point.
    """
    from .cansys import fundamental_at_nodes

    kind = normalize_kind(kind)
    p = sys.p
    f_atoms = np.asarray(f_atoms, dtype=complex)
    out = np.zeros((mesh.size, sys.n), dtype=complex)

    def kernel_cols(lam: float) -> np.ndarray:
        mesh.require_resolves(lam)
        u = fundamental_at_nodes(mesh.system, complex(lam), mesh)
        if kind == FULL:
            return u / np.sqrt(2.0)
        if kind == NEUMANN:
            return u[:, :, :p]
        m_sharp = boundary._limit_point_sharp_m(sys, float(lam))
        # y = s - m c with the boundary value m(lam + i0).
        return u[:, :, p:] - np.conj(m_sharp) * u[:, :, :p]

    for k, lam in enumerate(sigma.breakpoints):
        vec = sigma.jump_weights[k] @ np.atleast_1d(f_atoms[k])
        out += kernel_cols(float(lam)) @ vec
    if f_ac is not None and sigma.ac_grid is not None:
        f_ac = np.asarray(f_ac, dtype=complex)
        grid = sigma.ac_grid
        live = np.where(np.trace(sigma.ac_density, axis1=1, axis2=2).real > 1e-15)[0]
        if live.size >= 2:
            vals = np.zeros((grid.size, mesh.size, sys.n), dtype=complex)
            for k in live:
                vec = sigma.ac_density[k] @ np.atleast_1d(f_ac[k])
                vals[k] = kernel_cols(float(grid[k])) @ vec
            out += np.trapezoid(vals, x=grid, axis=0)
    return out
