"""Canonical differential systems J f' + F f = z H f on an interval.

Coefficient profiles are piecewise constant: each segment carries a real
symmetric PSD weight H with unit trace and a real symmetric F.  Half-line
systems append a constant tail segment that repeats indefinitely.  The
fundamental solution is propagated per segment by the matrix exponential
exp((t - t_j) * (-J)(z H_j - F_j)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .errors import (InvalidCoefficients, NotRegular, OutOfInterval,
                     QuadratureUnderResolved, UnsupportedDimension)
from .jmoebius import jcal

COEFF_TOL = 1e-10
INDIVISIBLE_TOL = 1e-9


@dataclass(frozen=True)
class Segment:
    """A cell of constant coefficients: length, weight H, potential F."""

    length: float
    H: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.H, dtype=float)
        f = np.asarray(self.F, dtype=float)
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "F", f)
        if not self.length > 0:
            raise ValueError("segment length must be positive")

    def issues(self) -> list[str]:
        out = []
        h, f = self.H, self.F
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            return ["H is not square"]
        if np.linalg.norm(h - h.T) > COEFF_TOL * max(1.0, np.linalg.norm(h)):
            out.append("H is not symmetric")
        if f.shape != h.shape:
            out.append("F shape differs from H")
        elif np.linalg.norm(f - f.T) > COEFF_TOL * max(1.0, np.linalg.norm(f)):
            out.append("F is not symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (h + h.T))
        if eigs.min() < -COEFF_TOL:
            out.append(f"H has negative eigenvalue {eigs.min():.3e}")
        if abs(np.trace(h) - 1.0) > COEFF_TOL:
            out.append(f"tr H = {np.trace(h):.12g} != 1")
        return out

    def is_rank_one(self) -> bool:
        eigs = np.linalg.eigvalsh(0.5 * (self.H + self.H.T))
        return eigs[:-1].max(initial=0.0) <= INDIVISIBLE_TOL


@dataclass(frozen=True)
class CanonicalSystem:
    """Piecewise-constant canonical system on [a, b] or [a, infinity)."""

    p: int
    a: float
    segments: tuple
    endpoint_right: str = "regular"
    tail: Segment | None = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("at least one segment is required")
        n = 2 * self.p
        for k, seg in enumerate(segs):
            if seg.H.shape != (n, n):
                raise ValueError(f"segments[{k}].H must be {n} x {n}")
        if self.endpoint_right not in ("regular", "limit_point"):
            raise ValueError("endpoint_right must be 'regular' or 'limit_point'")
        if self.endpoint_right == "limit_point" and self.tail is None:
            raise ValueError("half-line systems need a tail segment rule")
        object.__setattr__(self, "segments", segs)

    @property
    def n(self) -> int:
        return 2 * self.p

    @property
    def breaks(self) -> np.ndarray:
        """Segment boundary points a = t_0 < t_1 < ... < t_m."""
        return self.a + np.concatenate([[0.0], np.cumsum([s.length for s in self.segments])])

    @property
    def b(self) -> float:
        """Right end of the meshed part (the interval end in the regular case)."""
        return float(self.breaks[-1])

    @property
    def is_regular(self) -> bool:
        return self.endpoint_right == "regular"

    def segment_at(self, t: float) -> tuple[int, Segment, float]:
        """Segment index, segment and left edge covering time t."""
        breaks = self.breaks
        if t < self.a - 1e-12:
            raise OutOfInterval(f"t = {t} < a = {self.a}")
        if t > breaks[-1] + 1e-12:
            if self.is_regular:
                raise OutOfInterval(f"t = {t} > b = {breaks[-1]}")
            return len(self.segments), self.tail, float(breaks[-1])
        j = int(np.searchsorted(breaks, t, side="right") - 1)
        j = min(max(j, 0), len(self.segments) - 1)
        return j, self.segments[j], float(breaks[j])


@dataclass
class ValidationReport:
    ok: bool
    issues: list
    rank_one_segments: list
    definite: bool | None = None


def validate_system(sys: CanonicalSystem, raise_on_error: bool = True) -> ValidationReport:
    """Check (A1) per segment; flag rank-one weights; check (A2) for p = 1.

    Definiteness is decided exactly only for piecewise-constant p = 1
    profiles; for p > 1 it is recorded as None (user obligation).
    """
    issues, rank_one = [], []
    segs = list(sys.segments) + ([sys.tail] if sys.tail is not None else [])
    for k, seg in enumerate(segs):
        path = f"segments[{k}]" if k < len(sys.segments) else "tail"
        for msg in seg.issues():
            issues.append(f"{path}: {msg}")
        if seg.is_rank_one():
            rank_one.append(path)
    definite = None
    if sys.p == 1 and not issues:
        definite = _definite_p1(sys)
        if not definite:
            issues.append("(A2) fails: a nontrivial J f' + F f = 0 solution is H-null")
    report = ValidationReport(not issues, issues, rank_one, definite)
    if raise_on_error and issues:
        raise InvalidCoefficients("invalid coefficient profile", offenders=issues)
    return report


def _definite_p1(sys: CanonicalSystem) -> bool:
    # On each constant segment a solution of J f' + F f = 0 is
    # f(t) = exp((t - t_j) J F_j) f(t_j); by Cayley-Hamilton, H f vanishes on
    # the whole 2 x 2 segment iff H f(t_j) = 0 and H (J F) f(t_j) = 0.
    jc = jcal(sys.p)
    v = np.eye(2)
    rows = []
    segs = list(sys.segments) + ([sys.tail] if sys.tail is not None else [])
    for seg in segs:
        b0 = jc @ seg.F
        rows.append(seg.H @ v)
        rows.append(seg.H @ b0 @ v)
        v = expm(seg.length * b0) @ v
    stacked = np.vstack(rows)
    s = np.linalg.svd(stacked, compute_uv=False)
    return bool(s.min() > 1e-10 * max(1.0, s.max()))


# ---------------------------------------------------------------------------
# propagators


def generator(seg: Segment, z) -> np.ndarray:
    """Right-hand-side matrix B(z) = -J (z H - F); U' = B U on the segment.

    ``z`` may be an array; trailing matrix axes are appended.
    """
    n = seg.H.shape[0]
    jc = jcal(n // 2)
    z = np.asarray(z, dtype=complex)
    return -jc @ (z[..., None, None] * seg.H - seg.F)


def _expm2_traceless(b: np.ndarray) -> np.ndarray:
    """exp of traceless 2 x 2 matrices: cosh(d) I + sinh(d)/d B, d^2 = -det B."""
    d2 = -(b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0])
    d = np.sqrt(d2.astype(complex))
    small = np.abs(d) < 1e-6
    dsafe = np.where(small, 1.0, d)
    sinhc = np.where(small, 1.0 + d2 / 6.0 + d2 * d2 / 120.0, np.sinh(dsafe) / dsafe)
    out = np.cosh(d)[..., None, None] * np.eye(2) + sinhc[..., None, None] * b
    return out


def segment_propagator(seg: Segment, z, lengths=None) -> np.ndarray:
    """exp(length * B(z)); broadcasts over z and over an array of lengths."""
    if lengths is None:
        lengths = seg.length
    lengths = np.asarray(lengths, dtype=float)
    b = generator(seg, z)
    a = lengths[..., None, None] * b
    if a.shape[-1] == 2:
        return _expm2_traceless(a)
    return expm(a)


def _expm_scaled(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(exp(A) * e^{-rho}, rho): a growth-split exponential for huge |z|.

    Used where U(b, iy) would overflow (admissibility sweeps with y up to
    1e6); rho is the log of the factored-out scalar growth.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] == 2:
        d2 = -(a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0])
        d = np.sqrt(d2)
        s = np.sign(d.real) + (d.real == 0)
        dd = s * d                            # Re dd >= 0
        em = np.exp(-2.0 * dd)                # bounded
        cosh_sc = 0.5 * (1.0 + em)            # e^{-dd} cosh d
        sinh_sc = 0.5 * (1.0 - em) * s        # e^{-dd} sinh d
        small = np.abs(d) < 1e-6
        dsafe = np.where(small, 1.0, d)
        sinhc_sc = np.where(small, np.exp(-dd) * (1.0 + d2 / 6.0), sinh_sc / dsafe)
        out = cosh_sc[..., None, None] * np.eye(2) + sinhc_sc[..., None, None] * a
        return out, dd
    vals, vecs = np.linalg.eig(a)
    rho = vals.real.max(axis=-1).astype(complex)
    scaled = np.exp(vals - rho[..., None])
    out = np.einsum("...ij,...j,...jk->...ik", vecs, scaled, np.linalg.inv(vecs))
    return out, rho


def monodromy_scaled(sys: CanonicalSystem, z) -> tuple[np.ndarray, np.ndarray]:
    """(U(b, z) e^{-rho}, rho) without overflow; for |z| up to ~1e6."""
    z = np.asarray(z, dtype=complex)
    out = np.broadcast_to(np.eye(sys.n), z.shape + (sys.n, sys.n)).copy().astype(complex)
    rho = np.zeros(z.shape, dtype=complex)
    for seg in sys.segments:
        e, r = _expm_scaled(seg.length * generator(seg, z))
        out = e @ out
        rho = rho + r
    return out, rho


class FundamentalSolution:
    """U(t, z) with U(a, z) = I, propagated segment by segment.

    Immutable after construction; the per-boundary propagator cache is built
    once in ``__init__``.
    """

    def __init__(self, system: CanonicalSystem, z: complex):
        self.system = system
        self.z = complex(z)
        mats = [np.eye(system.n, dtype=complex)]
        for seg in system.segments:
            mats.append(segment_propagator(seg, self.z) @ mats[-1])
        self._at_breaks = np.asarray(mats)

    def eval(self, t: float) -> np.ndarray:
        sys = self.system
        j, seg, t_left = sys.segment_at(float(t))
        base = self._at_breaks[min(j, len(sys.segments))]
        dt = float(t) - t_left
        if j >= len(sys.segments):
            # Inside the repeated tail of a half-line system.
            ell = seg.length
            reps, rem = divmod(dt, ell)
            tail_full = segment_propagator(seg, self.z, lengths=ell * reps)
            return segment_propagator(seg, self.z, lengths=rem) @ tail_full @ base
        if dt <= 1e-14:
            return self._at_breaks[j]
        return segment_propagator(seg, self.z, lengths=dt) @ base

    __call__ = eval

    def eval_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        sys = self.system
        out = np.empty(ts.shape + (sys.n, sys.n), dtype=complex)
        flat = ts.ravel()
        res = out.reshape(-1, sys.n, sys.n)
        breaks = sys.breaks
        done = np.zeros(flat.size, dtype=bool)
        for j, seg in enumerate(sys.segments):
            lo, hi = breaks[j], breaks[j + 1]
            idx = np.where(~done & (flat >= lo - 1e-14) & (flat <= hi + 1e-14))[0]
            if idx.size == 0:
                continue
            props = segment_propagator(seg, self.z, lengths=flat[idx] - lo)
            res[idx] = props @ self._at_breaks[j]
            done[idx] = True
        for k in np.where(~done)[0]:
            res[k] = self.eval(flat[k])
        return out

    @property
    def monodromy(self) -> np.ndarray:
        if not self.system.is_regular:
            raise NotRegular("monodromy requires a regular right endpoint")
        return self._at_breaks[-1]

    # block accessors: c = first p columns, s = last p columns.
    def c(self, t: float) -> np.ndarray:
        return self.eval(t)[:, : self.system.p]

    def s(self, t: float) -> np.ndarray:
        return self.eval(t)[:, self.system.p:]

    def blocks_at_b(self):
        """(c1, c2, s1, s2) at the right endpoint b."""
        u = self.monodromy
        p = self.system.p
        return u[:p, :p], u[p:, :p], u[:p, p:], u[p:, p:]


def fundamental_solution(sys: CanonicalSystem, z: complex) -> FundamentalSolution:
    return FundamentalSolution(sys, z)


def monodromy(sys: CanonicalSystem, z: complex) -> np.ndarray:
    """U(b, z); requires a regular right endpoint."""
    if not sys.is_regular:
        raise NotRegular("half-line system has no monodromy matrix")
    return FundamentalSolution(sys, z).monodromy


def monodromy_batch(sys: CanonicalSystem, z_values, upto: int | None = None) -> np.ndarray:
    """U(b, z) over an array of z values, shape z.shape + (n, n).

    ``upto`` stops the composition after the first ``upto`` segments.
    """
    z = np.asarray(z_values, dtype=complex)
    segs = sys.segments if upto is None else sys.segments[:upto]
    out = np.broadcast_to(np.eye(sys.n), z.shape + (sys.n, sys.n)).copy().astype(complex)
    for seg in segs:
        out = segment_propagator(seg, z) @ out
    return out


# ---------------------------------------------------------------------------
# H-indivisible intervals


@dataclass(frozen=True)
class IndivisibleRun:
    """A maximal run of rank-one segments sharing a common direction angle."""

    t0: float
    t1: float
    psi: float
    abuts_left: bool
    abuts_right: bool


def _direction_angle(h: np.ndarray) -> float | None:
    w, v = np.linalg.eigh(0.5 * (h + h.T))
    if w[0] > INDIVISIBLE_TOL:
        return None
    xi = v[:, -1]
    if xi[0] < 0 or (xi[0] == 0 and xi[1] < 0):
        xi = -xi
    psi = float(np.arctan2(xi[1], xi[0]))
    if psi < 0:
        psi += np.pi
    if psi >= np.pi - 1e-15:
        psi = 0.0
    if np.linalg.norm(h - np.outer(xi, xi)) > INDIVISIBLE_TOL:
        return None
    return psi


def detect_indivisible(sys: CanonicalSystem) -> list[IndivisibleRun]:
    """Maximal runs where H is the fixed rank-one projector of angle psi.

    Only p = 1 piecewise-constant profiles are supported; for half-line
    systems the tail counts toward the right endpoint.
    """
    if sys.p != 1:
        raise UnsupportedDimension("indivisible detection needs p = 1")
    segs = list(sys.segments)
    tail_angle = _direction_angle(sys.tail.H) if sys.tail is not None else None
    breaks = sys.breaks
    angles = [_direction_angle(s.H) for s in segs]
    runs: list[IndivisibleRun] = []
    k = 0
    while k < len(segs):
        psi = angles[k]
        if psi is None:
            k += 1
            continue
        j = k
        while j + 1 < len(segs) and angles[j + 1] is not None \
                and abs(angles[j + 1] - psi) <= 1e-7:
            j += 1
        t0, t1 = float(breaks[k]), float(breaks[j + 1])
        at_right = (j == len(segs) - 1) and (
            sys.is_regular or (tail_angle is not None and abs(tail_angle - psi) <= 1e-7))
        runs.append(IndivisibleRun(t0, t1, psi, abuts_left=(k == 0), abuts_right=at_right))
        k = j + 1
    if not sys.is_regular and tail_angle is not None and (
            not runs or not runs[-1].abuts_right):
        runs.append(IndivisibleRun(float(breaks[-1]), np.inf, tail_angle,
                                   abuts_left=len(segs) == 0, abuts_right=True))
    return runs


def endpoint_indivisible_type(sys: CanonicalSystem, endpoint: str) -> float | None:
    """Angle of the indivisible run abutting 'left' or 'right', or None."""
    runs = detect_indivisible(sys)
    for run in runs:
        if endpoint == "left" and run.abuts_left:
            return run.psi
        if endpoint == "right" and run.abuts_right:
            return run.psi
    return None


# ---------------------------------------------------------------------------
# quadrature mesh


def _lagrange_partial_matrix(xs: np.ndarray) -> np.ndarray:
    """B[k, j] = int_{-1}^{x_k} of the j-th Lagrange basis polynomial."""
    m = xs.size
    out = np.zeros((m, m))
    for j in range(m):
        roots = np.delete(xs, j)
        coeffs = np.poly(roots)
        coeffs = coeffs / np.polyval(coeffs, xs[j])
        anti = np.polyint(coeffs)
        out[:, j] = np.polyval(anti, xs) - np.polyval(anti, -1.0)
    return out


class QuadratureMesh:
    """Per-segment Gauss-Legendre mesh resolving oscillations up to lam_max.

    Cells are subdivided so that an 8-node rule sees at least 8 nodes per
    period of exp(i lam len / 2).  Sampled functions are arrays indexed by
    the mesh nodes.
    """

    def __init__(self, system: CanonicalSystem, lam_max: float = 1.0, order: int = 8):
        if not system.is_regular:
            raise NotRegular("quadrature meshes cover regular systems; "
                             "truncate a half-line system first")
        self.system = system
        self.lam_max = float(max(abs(lam_max), 1.0))
        self.order = int(order)
        gx, gw = leggauss(self.order)
        self._gx, self._gw = gx, gw
        self._partial = _lagrange_partial_matrix(gx)

        nodes, weights, seg_idx, edges = [], [], [], [system.a]
        breaks = system.breaks
        for j, seg in enumerate(system.segments):
            ncell = max(1, int(np.ceil(seg.length * self.lam_max / (2 * np.pi))))
            cell_len = seg.length / ncell
            for c in range(ncell):
                lo = breaks[j] + c * cell_len
                nodes.append(lo + 0.5 * cell_len * (gx + 1.0))
                weights.append(0.5 * cell_len * gw)
                seg_idx.append(np.full(self.order, j))
                edges.append(lo + cell_len)
        self.nodes = np.concatenate(nodes)
        self.weights = np.concatenate(weights)
        self.seg_index = np.concatenate(seg_idx)
        self.cell_edges = np.asarray(edges)
        self.n_cells = self.cell_edges.size - 1
        self.H = np.stack([system.segments[j].H for j in self.seg_index])

    @property
    def size(self) -> int:
        return self.nodes.size

    def require_resolves(self, lam: float) -> None:
        if abs(lam) > self.lam_max * (1 + 1e-12):
            raise QuadratureUnderResolved(
                f"mesh resolves |lambda| <= {self.lam_max:g}, requested {lam:g}")

    def sample(self, fn) -> np.ndarray:
        return np.asarray([fn(t) for t in self.nodes])

    def integrate(self, values) -> np.ndarray:
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def pairing(self, f, g) -> complex:
        """L^2_H pairing int g(t)* H(t) f(t) dt of sampled vector functions."""
        f, g = np.asarray(f), np.asarray(g)
        integrand = np.einsum("ki,kij,kj->k", g.conj(), self.H, f)
        return complex(np.dot(self.weights, integrand))

    def weight_apply(self, f) -> np.ndarray:
        """Pointwise H(t) f(t) for a sampled vector function."""
        return np.einsum("kij,kj->ki", self.H, np.asarray(f))

    def cumulative(self, values) -> np.ndarray:
        """C_k = int_a^{t_k} of a sampled (piecewise-analytic) integrand.

        Within each cell the degree order-1 interpolant through the nodes is
        integrated exactly, so the result is spectrally accurate without
        extra evaluations.
        """
        values = np.asarray(values)
        m = self.order
        cells = values.reshape(self.n_cells, m, *values.shape[1:])
        half = 0.5 * np.diff(self.cell_edges)
        # Full-cell integrals, then an exclusive prefix sum over cells.
        full = np.tensordot(self._gw, cells, axes=(0, 1)) * half.reshape(
            -1, *([1] * (values.ndim - 1)))
        prefix = np.cumsum(full, axis=0) - full
        partial = np.einsum("km,cm...->ck...", self._partial, cells) * half.reshape(
            -1, 1, *([1] * (values.ndim - 1)))
        out = prefix[:, None, ...] + partial
        return out.reshape(values.shape)


def fundamental_at_nodes(sys: CanonicalSystem, z: complex, mesh: QuadratureMesh) -> np.ndarray:
    """U(t_k, z) at every mesh node, shape (N, n, n)."""
    fund = FundamentalSolution(sys, z)
    breaks = sys.breaks
    offs = mesh.nodes - breaks[mesh.seg_index]
    out = np.empty((mesh.size, sys.n, sys.n), dtype=complex)
    for j, seg in enumerate(sys.segments):
        idx = np.where(mesh.seg_index == j)[0]
        if idx.size == 0:
            continue
        props = segment_propagator(seg, complex(z), lengths=offs[idx])
        out[idx] = props @ fund._at_breaks[j]
    return out


def fundamental_sharp_at_nodes(sys: CanonicalSystem, z: complex,
                               mesh: QuadratureMesh) -> np.ndarray:
    """U#(t_k, z) = U(t_k, conj z)* at every mesh node."""
    u = fundamental_at_nodes(sys, np.conj(complex(z)), mesh)
    return np.swapaxes(u, -1, -2).conj()


# ---------------------------------------------------------------------------
# construction helpers and JSON interface


def free_system(length: float = 2.0, p: int = 1,
                endpoint_right: str = "regular") -> CanonicalSystem:
    """The free system H = I/(2p), F = 0; its solutions are rotations."""
    n = 2 * p
    seg = Segment(length, np.eye(n) / n, np.zeros((n, n)))
    tail = seg if endpoint_right == "limit_point" else None
    return CanonicalSystem(p, 0.0, (seg,), endpoint_right, tail)


def _matrix_from_json(obj, n: int, path: str) -> np.ndarray:
    try:
        m = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: not a numeric matrix ({exc})") from None
    if m.shape != (n, n):
        raise ValueError(f"{path}: expected shape {n}x{n}, got {list(m.shape)}")
    return m


def _segment_from_json(obj, n: int, path: str) -> Segment:
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: expected an object")
    for key in ("length", "H", "F"):
        if key not in obj:
            raise ValueError(f"{path}.{key}: missing")
    length = obj["length"]
    if not isinstance(length, (int, float)) or not length > 0:
        raise ValueError(f"{path}.length: must be a positive number")
    h = _matrix_from_json(obj["H"], n, f"{path}.H")
    f = _matrix_from_json(obj["F"], n, f"{path}.F")
    return Segment(float(length), h, f)


def system_from_json(data) -> CanonicalSystem:
    """Build a system from its JSON form, with precise-path diagnostics.

    Schema: {"p": int, "a": real, "endpoint_right": "regular" | "limit_point",
    "segments": [{"length", "H", "F"}, ...], "tail": optional segment}.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise ValueError("$: expected a JSON object")
    if "p" not in data or not isinstance(data["p"], int) or data["p"] < 1:
        raise ValueError("p: must be a positive integer")
    p = data["p"]
    a = data.get("a", 0.0)
    if not isinstance(a, (int, float)):
        raise ValueError("a: must be a number")
    endpoint = data.get("endpoint_right", "regular")
    if endpoint not in ("regular", "limit_point"):
        raise ValueError("endpoint_right: must be 'regular' or 'limit_point'")
    raw_segs = data.get("segments")
    if not isinstance(raw_segs, list) or not raw_segs:
        raise ValueError("segments: must be a non-empty list")
    segs = [_segment_from_json(s, 2 * p, f"segments[{k}]") for k, s in enumerate(raw_segs)]
    tail = None
    if endpoint == "limit_point":
        if "tail" not in data:
            raise ValueError("tail: required for limit_point systems")
        tail = _segment_from_json(data["tail"], 2 * p, "tail")
    sys = CanonicalSystem(p, float(a), tuple(segs), endpoint, tail)
    report = validate_system(sys, raise_on_error=False)
    if not report.ok:
        raise InvalidCoefficients("; ".join(report.issues), offenders=report.issues)
    return sys


def system_to_json(sys: CanonicalSystem) -> dict:
    out = {
        "p": sys.p,
        "a": sys.a,
        "endpoint_right": sys.endpoint_right,
        "segments": [
            {"length": s.length, "H": s.H.tolist(), "F": s.F.tolist()}
            for s in sys.segments
        ],
    }
    if sys.tail is not None:
        out["tail"] = {"length": sys.tail.length, "H": sys.tail.H.tolist(),
                       "F": sys.tail.F.tolist()}
    return out
