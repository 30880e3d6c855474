"""Herglotz/Nevanlinna representations, kernel certificates, Stieltjes inversion.

A p x p Herglotz function is stored through its integral-representation data
(alpha, beta, atoms, a.c. density); the inverse direction recovers a
matrix-valued distribution function from boundary values of the imaginary
part on shrinking horizontal lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from .errors import ConjugateCollision, NoConvergence, NonMonotone, PoleAt
from .linrel import NevanlinnaFamilySample

ATOM_COLLISION_TOL = 1e-12
DEFAULT_EPS_SEQ = (1e-2, 5e-3, 2.5e-3)


def _hermitian_part(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def matrix_imag(a):
    """Matrix imaginary part (A - A*) / 2i; reduces to .imag for scalars."""
    a = np.asarray(a)
    if a.ndim == 0:
        return a.imag
    return (a - np.swapaxes(a, -1, -2).conj()) / 2j


def _min_eig(a) -> float:
    a = np.asarray(a)
    if a.ndim == 0:
        return float(np.real(a))
    return float(np.linalg.eigvalsh(_hermitian_part(a)).min())


@dataclass(frozen=True)
class HerglotzRep:
    """Integral-representation data (alpha, beta, atoms, a.c. density).

    ``atoms`` is a sequence of (position, weight) pairs with strictly
    increasing positions and PSD weights.  The optional absolutely
    continuous part is a sampled non-negative density on a real grid.
    """

    alpha: np.ndarray
    beta: np.ndarray
    atoms: tuple = ()
    ac_grid: np.ndarray | None = None
    ac_density: np.ndarray | None = None

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=complex))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=complex))
        if alpha.shape != beta.shape or alpha.shape[0] != alpha.shape[1]:
            raise ValueError("alpha, beta must be square matrices of equal shape")
        if np.linalg.norm(alpha - alpha.conj().T) > 1e-10 * max(1.0, np.linalg.norm(alpha)):
            raise ValueError("alpha must be Hermitian")
        floor = -1e-12 * max(1.0, np.linalg.norm(beta))
        if _min_eig(beta) < floor:
            raise ValueError("beta must be positive semidefinite")
        atoms = []
        prev = -np.inf
        for lam, w in self.atoms:
            lam = float(lam)
            w = np.atleast_2d(np.asarray(w, dtype=complex))
            if w.shape != alpha.shape:
                raise ValueError("atom weight shape mismatch")
            if lam <= prev:
                raise ValueError("atom abscissas must be strictly increasing")
            if _min_eig(w) < -1e-12 * max(1.0, np.linalg.norm(w)):
                raise ValueError(f"atom weight at {lam} is not PSD")
            atoms.append((lam, w))
            prev = lam
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "atoms", tuple(atoms))
        if (self.ac_grid is None) != (self.ac_density is None):
            raise ValueError("ac_grid and ac_density must be supplied together")
        if self.ac_grid is not None:
            grid = np.asarray(self.ac_grid, dtype=float)
            dens = np.asarray(self.ac_density, dtype=complex)
            if dens.shape != (grid.size,) + alpha.shape:
                raise ValueError("ac_density must have shape (len(grid), p, p)")
            object.__setattr__(self, "ac_grid", grid)
            object.__setattr__(self, "ac_density", dens)

    @property
    def p(self) -> int:
        return self.alpha.shape[0]


def eval_herglotz(rep: HerglotzRep, z):
    """Evaluate Q(z) = alpha + beta z + sum_j [1/(lam_j - z) - lam_j/(1+lam_j^2)] w_j
    plus the quadrature of the a.c. part.

    ``z`` may be a scalar or an array; the result gains trailing (p, p) axes.
    """
    z = np.asarray(z, dtype=complex)
    scalar_in = z.ndim == 0
    zf = np.atleast_1d(z)
    for lam, _ in rep.atoms:
        if np.any(np.abs(zf - lam) < ATOM_COLLISION_TOL):
            raise PoleAt(f"z collides with the atom at {lam}")
    out = rep.alpha + zf[..., None, None] * rep.beta
    for lam, w in rep.atoms:
        coef = 1.0 / (lam - zf) - lam / (1.0 + lam * lam)
        out = out + coef[..., None, None] * w
    if rep.ac_grid is not None:
        lam = rep.ac_grid
        coef = 1.0 / (lam[None, :] - zf[:, None]) - lam[None, :] / (1.0 + lam * lam)[None, :]
        integrand = coef[..., None, None] * rep.ac_density[None, ...]
        out = out + simpson(integrand, x=lam, axis=1)
    if scalar_in:
        out = out[0]
    return out


def herglotz_as_tau(rep: HerglotzRep):
    """Wrap a representation as the Nevanlinna family sample (phi, psi) = (I, Q(z))."""
    p = rep.p

    def sample(z: complex) -> NevanlinnaFamilySample:
        return NevanlinnaFamilySample(np.eye(p), eval_herglotz(rep, z), z)

    return sample


@dataclass(frozen=True)
class KernelGram:
    """Nevanlinna-kernel Gram matrix at a set of non-real nodes."""

    nodes: tuple
    gram: np.ndarray
    min_eig: float

    @property
    def certified(self) -> bool:
        scale = max(1.0, float(np.linalg.norm(self.gram)))
        return self.min_eig >= -1e-8 * scale


def kernel_positivity(q, nodes, diag_step: float = 1e-6) -> KernelGram:
    """Assemble the kernel (Q(z) - Q(zeta)*) / (z - conj(zeta)) blockwise.

    Nodes must pairwise satisfy z != conj(zeta); the difference-quotient limit
    on a true diagonal collision is taken with a symmetric finite difference
    of half-width ``diag_step``.
    """
    nodes = [complex(v) for v in nodes]
    if len(nodes) < 2:
        raise ValueError("need at least two nodes")
    vals = [np.atleast_2d(np.asarray(q(zk), dtype=complex)) for zk in nodes]
    p = vals[0].shape[0]
    m = len(nodes)
    gram = np.zeros((m * p, m * p), dtype=complex)
    for j, zj in enumerate(nodes):
        for k, zk in enumerate(nodes):
            denom = zj - np.conj(zk)
            if abs(denom) < 1e-12:
                if abs(zj - zk) < 1e-12:
                    # z on (or numerically on) the real axis: kernel limit Q'(z).
                    zc = 0.5 * (zj + np.conj(zk))
                    block = (np.atleast_2d(np.asarray(q(zc + diag_step), dtype=complex))
                             - np.atleast_2d(np.asarray(q(zc - diag_step), dtype=complex))) / (2 * diag_step)
                else:
                    raise ConjugateCollision(f"nodes {zj} and {zk} satisfy z = conj(zeta)")
            else:
                block = (vals[j] - vals[k].conj().T) / denom
            gram[j * p:(j + 1) * p, k * p:(k + 1) * p] = block
    gram = _hermitian_part(gram)
    return KernelGram(tuple(nodes), gram, float(np.linalg.eigvalsh(gram).min()))


@dataclass(frozen=True)
class DistributionFunction:
    """Non-decreasing left-continuous matrix distribution sigma(lambda).

    Stored as atom breakpoints with PSD jumps plus a sampled a.c. density;
    normalized so that sigma(0) = 0 and intervals are half-open [l1, l2)
    (jump at l1 included, at l2 excluded).
    """

    p: int
    breakpoints: np.ndarray
    jump_weights: np.ndarray = field(repr=False)
    ac_grid: np.ndarray | None = field(default=None, repr=False)
    ac_density: np.ndarray | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        jw = np.asarray(self.jump_weights, dtype=complex).reshape(bp.size, self.p, self.p)
        order = np.argsort(bp)
        object.__setattr__(self, "breakpoints", bp[order])
        object.__setattr__(self, "jump_weights", jw[order])
        if self.ac_grid is not None:
            object.__setattr__(self, "ac_grid", np.asarray(self.ac_grid, dtype=float))
            object.__setattr__(self, "ac_density",
                               np.asarray(self.ac_density, dtype=complex).reshape(-1, self.p, self.p))

    @property
    def atoms(self):
        return list(zip(self.breakpoints, self.jump_weights))

    def _ac_increment(self, l1: float, l2: float) -> np.ndarray:
        out = np.zeros((self.p, self.p), dtype=complex)
        if self.ac_grid is None or l2 <= l1:
            return out
        grid, dens = self.ac_grid, self.ac_density
        lo, hi = max(l1, grid[0]), min(l2, grid[-1])
        if hi <= lo:
            return out
        mask = (grid >= lo) & (grid <= hi)
        sub_g, sub_d = grid[mask], dens[mask]
        if sub_g.size >= 2:
            out = np.trapezoid(sub_d, x=sub_g, axis=0)
        return out

    def increment(self, l1: float, l2: float) -> np.ndarray:
        """sigma-increment over the half-open interval [l1, l2)."""
        if l2 < l1:
            return -self.increment(l2, l1)
        out = self._ac_increment(l1, l2)
        for lam, w in zip(self.breakpoints, self.jump_weights):
            if l1 <= lam < l2:
                out = out + w
        return out

    def sigma(self, lam: float) -> np.ndarray:
        """sigma(lambda) with the normalization sigma(0) = 0, left-continuous."""
        if lam >= 0:
            return self.increment(0.0, lam)
        return -self.increment(lam, 0.0)

    def total_mass(self) -> np.ndarray:
        lo = min(self.breakpoints[0] if self.breakpoints.size else 0.0,
                 self.ac_grid[0] if self.ac_grid is not None else 0.0)
        hi = max(self.breakpoints[-1] if self.breakpoints.size else 0.0,
                 self.ac_grid[-1] if self.ac_grid is not None else 0.0)
        return self.increment(lo, hi + 1.0)

    def integrate_bilinear(self, f_vals_atoms, g_vals_atoms=None,
                           f_vals_ac=None, g_vals_ac=None) -> np.ndarray:
        """int G(lam)* dsigma(lam) F(lam) for sampled vector/matrix functions.

        ``f_vals_atoms`` has one row per breakpoint; the a.c. samples align
        with ``ac_grid``.  G defaults to F.
        """
        if g_vals_atoms is None:
            g_vals_atoms = f_vals_atoms
        out = 0.0 + 0.0j
        for k in range(self.breakpoints.size):
            fk = np.atleast_1d(f_vals_atoms[k])
            gk = np.atleast_1d(g_vals_atoms[k])
            out = out + gk.conj() @ self.jump_weights[k] @ fk
        if self.ac_grid is not None and f_vals_ac is not None:
            if g_vals_ac is None:
                g_vals_ac = f_vals_ac
            f_vals_ac = np.asarray(f_vals_ac)
            g_vals_ac = np.asarray(g_vals_ac)
            integrand = np.einsum("ki,kij,kj->k", g_vals_ac.conj(), self.ac_density, f_vals_ac)
            out = out + np.trapezoid(integrand, x=self.ac_grid)
        return out

    def scaled(self, factor: float) -> "DistributionFunction":
        return DistributionFunction(
            self.p, self.breakpoints, factor * self.jump_weights,
            self.ac_grid, None if self.ac_density is None else factor * self.ac_density,
            self.label)

    def to_csv(self, path) -> None:
        """Columns: lambda, then p^2 (re, im) entries of sigma(lambda) row-major."""
        grid = [self.breakpoints - 1e-12, self.breakpoints + 1e-12]
        if self.ac_grid is not None:
            grid.append(self.ac_grid)
        lams = np.unique(np.concatenate(grid))
        lines = [self._csv_header()]
        for lam in lams:
            s = self.sigma(float(lam)).reshape(-1)
            cells = [f"{lam:.17g}"]
            for v in s:
                cells.append(f"{v.real:.17g}")
                cells.append(f"{v.imag:.17g}")
            lines.append(",".join(cells))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def _csv_header(self) -> str:
        cols = ["lambda"]
        for i in range(self.p):
            for j in range(self.p):
                cols += [f"sigma_{i}{j}_re", f"sigma_{i}{j}_im"]
        head = ",".join(cols)
        if self.label:
            head = f"# {self.label}\n" + head
        return head


def _vectorized(r):
    """Make a callable accept complex arrays, falling back to a scalar loop."""

    def wrapped(z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            return np.asarray(r(complex(z)))
        try:
            vals = np.asarray(r(z))
            if vals.shape[: z.ndim] == z.shape:
                return vals
        except (TypeError, ValueError):
            pass
        rows = [np.asarray(r(complex(zk))) for zk in z.ravel()]
        return np.asarray(rows).reshape(z.shape + np.asarray(rows[0]).shape)

    return wrapped


def _im_on_line(r, mu: np.ndarray, nu: float) -> np.ndarray:
    """Matrix imaginary part of r on the horizontal line mu + i nu, shape (n, p, p)."""
    vals = np.asarray(r(mu + 1j * nu))
    if vals.ndim == 1:
        vals = vals[:, None, None]
    return np.asarray(matrix_imag(vals))


def _richardson(nu_pair, v_pair):
    """Linear-in-nu extrapolation to nu = 0 from two samples."""
    (n1, n2), (v1, v2) = nu_pair, v_pair
    return (n1 * v2 - n2 * v1) / (n1 - n2)


def stieltjes_invert(r, window, grid_step: float = 2e-3,
                     eps_seq=DEFAULT_EPS_SEQ,
                     min_jump: float = 1.0,
                     atom_merge_steps: int = 3,
                     label: str = "") -> DistributionFunction:
    """Recover sigma from a Herglotz function by Stieltjes inversion.

    The increment over [l1, l2) equals (1/pi) lim int Im r(mu + i nu) dmu;
    the limit is realized by Richardson extrapolation over ``eps_seq``.
    Atoms are detected where nu * Im r exceeds 0.1 * min_jump and their
    weights are the extrapolated residue estimates nu * Im r at the refined
    positions.

    Raises
    ------
    NonMonotone
        If an extrapolated increment has an eigenvalue below -1e-6.
    NoConvergence
        If the extrapolation residual fails to shrink along ``eps_seq``.
    """
    l1, l2 = float(window[0]), float(window[1])
    if not l2 > l1:
        raise ValueError("window must satisfy l1 < l2")
    eps_seq = sorted(float(e) for e in eps_seq)[::-1]
    if len(eps_seq) < 2:
        raise ValueError("eps_seq needs at least two levels")
    h = float(grid_step)
    n_pts = max(int(np.ceil((l2 - l1) / h)) + 1, 9)
    mu = np.linspace(l1, l2, n_pts)
    h = mu[1] - mu[0]

    r = _vectorized(r)
    im_lines = [_im_on_line(r, mu, nu) for nu in eps_seq]
    p = im_lines[0].shape[1]
    scalar_probe = np.asarray(r(complex(mu[0], eps_seq[0])))
    scalar_mode = scalar_probe.ndim == 0

    # Convergence control: window integrals of Im r at each nu must settle.
    totals = [np.trapezoid(np.trace(line, axis1=1, axis2=2).real, x=mu) for line in im_lines]
    diffs = [abs(totals[i + 1] - totals[i]) for i in range(len(totals) - 1)]
    scale = max(1.0, abs(totals[-1]))
    if len(diffs) >= 2 and diffs[-1] > 0.95 * diffs[-2] + 1e-12 * scale:
        raise NoConvergence(
            f"window-integral residuals do not shrink: {diffs}")

    # --- atom detection on the finest line -------------------------------
    nu_min = eps_seq[-1]
    dvals = nu_min * np.trace(im_lines[-1], axis1=1, axis2=2).real
    threshold = 0.1 * min_jump
    clusters: list[list[int]] = []
    for k in np.where(dvals > threshold)[0]:
        if clusters and k - clusters[-1][-1] <= atom_merge_steps:
            clusters[-1].append(int(k))
        else:
            clusters.append([int(k)])
    candidates = [mu[cl[int(np.argmax(dvals[cl]))]] for cl in clusters]

    def trace_im(x: float, nu: float) -> float:
        v = np.asarray(r(complex(x, nu)))
        return float(np.trace(np.atleast_2d(matrix_imag(v))).real)

    positions, weights = [], []
    for mu_c in candidates:
        res = minimize_scalar(lambda x: -trace_im(x, nu_min),
                              bounds=(mu_c - 1.5 * h, mu_c + 1.5 * h), method="bounded",
                              options={"xatol": 1e-12})
        lam = float(res.x)
        samples = []
        for nu in eps_seq:
            v = np.atleast_2d(np.asarray(matrix_imag(np.asarray(r(complex(lam, nu))))))
            samples.append(nu * v)
        w_fine = _hermitian_part(_richardson(eps_seq[-2:], samples[-2:]))
        if _min_eig(w_fine) < -1e-6:
            raise NonMonotone(f"atom weight at {lam} has eigenvalue {_min_eig(w_fine)}")
        # Steep a.c. density can trip the detector; its residue estimate
        # extrapolates to ~0 and is dropped here.
        if float(np.trace(w_fine).real) > threshold:
            positions.append(lam)
            weights.append(w_fine)

    # --- a.c. density with detected Lorentzians removed ------------------
    def deflated(line_idx: int) -> np.ndarray:
        nu = eps_seq[line_idx]
        out = im_lines[line_idx].copy()
        for lam, w in zip(positions, weights):
            lor = nu / ((mu - lam) ** 2 + nu * nu)
            out = out - lor[:, None, None] * w
        return out

    rho = _richardson(eps_seq[-2:], [deflated(-2), deflated(-1)]) / np.pi
    rho = _hermitian_part(rho)
    rho_floor = np.asarray([_min_eig(rho[k]) for k in range(n_pts)])
    rho_scale = max(1.0, float(np.abs(rho).max()))
    if rho_floor.min() < -1e-6 * rho_scale:
        raise NonMonotone(
            f"a.c. density has eigenvalue {rho_floor.min()} below tolerance")
    if p == 1:
        rho = np.clip(rho.real, 0.0, None).astype(complex)
    # Suppress the extrapolation noise left under subtracted atoms.
    for lam in positions:
        near = np.abs(mu - lam) <= (atom_merge_steps + 0.5) * h
        if np.any(~near):
            for k in np.where(near)[0]:
                left = np.where(~near & (mu < mu[k]))[0]
                right = np.where(~near & (mu > mu[k]))[0]
                neighbors = []
                if left.size:
                    neighbors.append(rho[left[-1]])
                if right.size:
                    neighbors.append(rho[right[0]])
                rho[k] = np.mean(neighbors, axis=0)

    dist = DistributionFunction(
        p=p,
        breakpoints=np.asarray(positions, dtype=float),
        jump_weights=(np.asarray(weights, dtype=complex).reshape(len(weights), p, p)
                      if weights else np.zeros((0, p, p), dtype=complex)),
        ac_grid=mu,
        ac_density=rho,
        label=label or ("scalar" if scalar_mode else f"matrix p={p}"),
    )
    return dist
