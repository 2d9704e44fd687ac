"""Small dense complex linear algebra.

Everything here works on plain ``numpy`` complex arrays.  The Hermitian
eigensolver is a cyclic Jacobi method written out by hand so that results
are deterministic and independent of the LAPACK build.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ComplexEigenvalue,
    DimensionMismatch,
    InvalidFamily,
    NoConvergence,
    NonHermitianInput,
    NonNormalInput,
)

MAX_SWEEPS = 100
# Jacobi stops once the off-diagonal mass is this small relative to ||H||_F.
# Convergence is quadratic, so reaching it costs at most one extra sweep.
_JACOBI_REL = 1e-14


def fro(m) -> float:
    return float(np.linalg.norm(m))


def default_tol(m) -> float:
    return 1e-9 * max(1.0, fro(m))


def cluster_gap(m) -> float:
    return 1e-7 * max(1.0, fro(m))


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_hermitian(m, tol=None) -> bool:
    m = as_matrix(m)
    tol = default_tol(m) if tol is None else tol
    return fro(m - dagger(m)) <= tol


def is_normal(m, tol=None) -> bool:
    m = as_matrix(m)
    tol = default_tol(m) if tol is None else tol
    return fro(m @ dagger(m) - dagger(m) @ m) <= tol


def is_projection(m, tol=None) -> bool:
    m = as_matrix(m)
    tol = default_tol(m) if tol is None else tol
    return fro(m @ m - m) <= tol and fro(m - dagger(m)) <= tol


def is_unitary(m, tol=None) -> bool:
    m = as_matrix(m)
    tol = default_tol(m) if tol is None else tol
    return fro(m @ dagger(m) - np.eye(m.shape[0])) <= tol


def proj_leq(q, p, tol=1e-9) -> bool:
    """Range inclusion ``q <= p`` tested as ``p q = q``."""
    q = np.asarray(q)
    p = np.asarray(p)
    return fro(p @ q - q) <= tol


def commutator_norm(a, b) -> float:
    return fro(a @ b - b @ a)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projection; two projectors are equal when their ranges agree."""

    matrix: np.ndarray
    tol: float = 1e-8

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if not is_projection(m, self.tol):
            raise InvalidFamily("matrix is not an orthogonal projection")
        m = (m + dagger(m)) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def __eq__(self, other):
        if not isinstance(other, Projector):
            return NotImplemented
        return self.dim == other.dim and fro(self.matrix - other.matrix) <= self.tol

    def __hash__(self):
        return hash((self.dim, self.rank))

    def __le__(self, other: "Projector") -> bool:
        return proj_leq(self.matrix, other.matrix, self.tol)

    def __ge__(self, other: "Projector") -> bool:
        return proj_leq(other.matrix, self.matrix, self.tol)

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix, self.tol)

    @classmethod
    def from_vectors(cls, vecs: np.ndarray, tol=1e-8) -> "Projector":
        vecs = np.asarray(vecs, dtype=complex)
        return cls(vecs @ dagger(vecs), tol)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """A normal operator as eigenvalue/eigenprojector pairs.

    Eigenvalues are kept in the canonical order (rank, then real part, then
    imaginary part), where rank means ``Re + Im``.
    """

    eigenvalues: tuple
    projectors: tuple
    tol: float = 1e-8

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.projectors) or not self.eigenvalues:
            raise InvalidFamily("need one projector per eigenvalue")
        projs = tuple(p if isinstance(p, Projector) else Projector(p, self.tol) for p in self.projectors)
        n = projs[0].dim
        if any(p.dim != n for p in projs):
            raise DimensionMismatch("projectors of different dimension")
        vals = tuple(complex(v) for v in self.eigenvalues)
        order = sorted(range(len(vals)), key=lambda i: (vals[i].real + vals[i].imag, vals[i].real, vals[i].imag))
        vals = tuple(vals[i] for i in order)
        projs = tuple(projs[i] for i in order)
        if len(set(vals)) != len(vals):
            raise InvalidFamily("eigenvalues must be pairwise distinct")
        total = sum(p.matrix for p in projs)
        if fro(total - np.eye(n)) > self.tol * n:
            raise InvalidFamily("projectors do not sum to the identity")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if fro(projs[i].matrix @ projs[j].matrix) > self.tol * n:
                    raise InvalidFamily("projectors are not mutually orthogonal")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def from_pairs(cls, pairs, tol=1e-8) -> "SpectralData":
        pairs = list(pairs)
        return cls(tuple(v for v, _ in pairs), tuple(p for _, p in pairs), tol)

    @classmethod
    def diagonal(cls, values) -> "SpectralData":
        """Exact spectral data of ``diag(values)``; equal entries share a projector."""
        values = [complex(v) for v in values]
        n = len(values)
        distinct = sorted(set(values), key=lambda z: (z.real + z.imag, z.real, z.imag))
        projs = []
        for z in distinct:
            d = np.zeros((n, n), dtype=complex)
            for i, v in enumerate(values):
                if v == z:
                    d[i, i] = 1.0
            projs.append(d)
        return cls(tuple(distinct), tuple(projs))

    @property
    def pairs(self):
        return list(zip(self.eigenvalues, self.projectors))

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def operator(self) -> np.ndarray:
        return sum(v * p.matrix for v, p in self.pairs)

    def is_hermitian(self, tol=1e-9) -> bool:
        return all(abs(v.imag) <= tol for v in self.eigenvalues)

    def map(self, fn: Callable[[complex], complex]) -> "SpectralData":
        """Functional calculus; eigenvalues sent to the same value are merged."""
        merged: dict = {}
        for v, p in self.pairs:
            w = complex(fn(v))
            merged[w] = merged.get(w, 0) + p.matrix
        return SpectralData(tuple(merged), tuple(merged.values()), self.tol)


def _jacobi(h: np.ndarray, max_sweeps: int):
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    thresh = _JACOBI_REL * fro(h)
    for _ in range(max_sweeps + 1):
        off = fro(a - np.diag(np.diag(a)))
        if off <= thresh:
            return np.real(np.diag(a)).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                e = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                ebar = e.conjugate()
                u_pp, u_pq, u_qp, u_qq = c, s, -s * ebar, c * ebar
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = col_p * u_pp + col_q * u_qp
                a[:, q] = col_p * u_pq + col_q * u_qq
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = np.conj(u_pp) * row_p + np.conj(u_qp) * row_q
                a[q, :] = np.conj(u_pq) * row_p + np.conj(u_qq) * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * u_pp + vq * u_qp
                v[:, q] = vp * u_pq + vq * u_qq
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")


def _clusters(values: Sequence[float], gap: float):
    """Group sorted indices into runs whose neighbours differ by at most ``gap``."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    groups: list = []
    for i in order:
        if groups and values[i] - values[groups[-1][-1]] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eigh(h, tol=None, max_sweeps=MAX_SWEEPS):
    """Raw eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""
    h = as_matrix(h)
    tol = default_tol(h) if tol is None else tol
    if not is_hermitian(h, tol):
        raise NonHermitianInput(f"||H - H^dagger||_F = {fro(h - dagger(h)):.3e} exceeds {tol:.3e}")
    w, v = _jacobi((h + dagger(h)) / 2, max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigendecomposition(h, tol=None, max_sweeps=MAX_SWEEPS) -> SpectralData:
    h = as_matrix(h)
    w, v = eigh(h, tol, max_sweeps)
    gap = cluster_gap(h)
    vals, projs = [], []
    for grp in _clusters(list(w), gap):
        vals.append(float(np.mean(w[grp])))
        projs.append(Projector.from_vectors(v[:, grp]))
    return SpectralData(tuple(vals), tuple(projs))


def split_normal(c, tol=None):
    c = as_matrix(c)
    tol = default_tol(c) if tol is None else tol
    if not is_normal(c, tol):
        raise NonNormalInput(f"||CC^dagger - C^dagger C||_F exceeds {tol:.3e}")
    re = (c + dagger(c)) / 2
    im = (c - dagger(c)) / 2j
    return re, im


@dataclass(frozen=True, eq=False)
class TwoParamSpectralFamily:
    """Product family ``P(eps, eta) = P1(eps) P2(eta)`` of a normal operator.

    ``re_blocks[j]`` projects onto the eigenspace of the Hermitian real part
    for eigenvalue ``real_cuts[j]``; likewise for the imaginary part.
    """

    real_cuts: tuple
    imag_cuts: tuple
    re_blocks: tuple
    im_blocks: tuple
    source: SpectralData

    @property
    def dim(self) -> int:
        return self.source.dim

    def re_part(self, eps: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for cut, blk in zip(self.real_cuts, self.re_blocks):
            if cut <= eps:
                out = out + blk
        return out

    def im_part(self, eta: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for cut, blk in zip(self.imag_cuts, self.im_blocks):
            if cut <= eta:
                out = out + blk
        return out

    def __call__(self, eps: float, eta: float) -> np.ndarray:
        return self.re_part(eps) @ self.im_part(eta)

    def grid(self) -> "GridFamily":
        vals = tuple(tuple(self(e, h) for h in self.imag_cuts) for e in self.real_cuts)
        return GridFamily(tuple(self.real_cuts), tuple(self.imag_cuts), vals, np.zeros((self.dim, self.dim), dtype=complex))

    def bound(self) -> float:
        return fro(self.source.operator())


def spectral_family(sd: SpectralData, gap=None) -> TwoParamSpectralFamily:
    """Two-parameter family of already-diagonalised spectral data."""
    op = sd.operator()
    gap = cluster_gap(op) if gap is None else gap
    re_vals = [v.real for v in sd.eigenvalues]
    im_vals = [v.imag for v in sd.eigenvalues]

    def blocks(vals):
        cuts, blks = [], []
        for grp in _clusters(vals, gap):
            cuts.append(float(np.mean([vals[i] for i in grp])))
            blks.append(sum(sd.projectors[i].matrix for i in grp))
        return tuple(cuts), tuple(blks)

    rc, rb = blocks(re_vals)
    ic, ib = blocks(im_vals)
    return TwoParamSpectralFamily(rc, ic, rb, ib, sd)


def normal_spectral_decomposition(c, tol=None, max_sweeps=MAX_SWEEPS):
    """Joint eigendecomposition of a normal matrix through its Hermitian parts."""
    c = as_matrix(c)
    re, im = split_normal(c, tol)
    gap = cluster_gap(c)
    w, v = eigh(re, None, max_sweeps)
    cols: list = []  # (eps, eta, vector)
    for grp in _clusters(list(w), gap):
        eps = float(np.mean(w[grp]))
        basis = v[:, grp]
        restricted = dagger(basis) @ im @ basis
        u, wv = eigh((restricted + dagger(restricted)) / 2, None, max_sweeps)
        vecs = basis @ wv
        for k in range(len(grp)):
            cols.append((eps, float(u[k]), vecs[:, k]))
    etas = [c_[1] for c_ in cols]
    eta_of = {}
    for grp in _clusters(etas, gap):
        mean = float(np.mean([etas[i] for i in grp]))
        for i in grp:
            eta_of[i] = mean
    joint: dict = {}
    for i, (eps, _, vec) in enumerate(cols):
        key = complex(eps, eta_of[i])
        joint.setdefault(key, []).append(vec)
    vals = tuple(joint)
    projs = tuple(Projector.from_vectors(np.column_stack(vs)) for vs in joint.values())
    sd = SpectralData(vals, projs)
    return sd, spectral_family(sd, gap)


def as_spectral(a, tol=None) -> SpectralData:
    """Accept either SpectralData or a normal matrix."""
    if isinstance(a, SpectralData):
        return a
    return normal_spectral_decomposition(a, tol)[0]


def evaluate_family(family: TwoParamSpectralFamily, eps: float, eta: float) -> Projector:
    return Projector(family(eps, eta))


@dataclass(frozen=True, eq=False)
class GridFamily:
    """A two-parameter step family given by its values on a grid of cuts.

    ``values[j][k]`` holds the value on ``[eps_j, eps_{j+1}) x [eta_k, eta_{k+1})``.
    Below the first cut in either direction the family equals ``zero``.
    Values may be matrices or any lattice element type.
    """

    eps: tuple
    eta: tuple
    values: tuple
    zero: object = None

    def __call__(self, e: float, h: float):
        j = _step_index(self.eps, e)
        k = _step_index(self.eta, h)
        if j < 0 or k < 0:
            return self.zero
        return self.values[j][k]

    def rows(self):
        for j, e in enumerate(self.eps):
            for k, h in enumerate(self.eta):
                yield e, h, self.values[j][k]


def _step_index(cuts, x) -> int:
    idx = -1
    for i, c in enumerate(cuts):
        if c <= x:
            idx = i
    return idx


def family_increments(grid: GridFamily, tol=1e-8):
    """Mixed second differences of a matrix-valued grid family.

    Yields ``(eps_j + i eta_k, increment)`` for non-zero increments and raises
    InvalidFamily when an increment is not an orthogonal projection.
    """
    n = grid.zero.shape[0]
    zero = np.zeros((n, n), dtype=complex)

    def at(j, k):
        if j < 0 or k < 0:
            return zero
        return np.asarray(grid.values[j][k], dtype=complex)

    for j, e in enumerate(grid.eps):
        for k, h in enumerate(grid.eta):
            d = at(j, k) - at(j - 1, k) - at(j, k - 1) + at(j - 1, k - 1)
            if fro(d) <= tol:
                continue
            if not is_projection(d, tol):
                raise InvalidFamily(f"increment at ({e}, {h}) is not a projection")
            yield complex(e, h), d


def reconstruct_operator(family, tol=1e-8) -> np.ndarray:
    grid = family.grid() if isinstance(family, TwoParamSpectralFamily) else family
    n = grid.zero.shape[0]
    out = np.zeros((n, n), dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    for z, d in family_increments(grid, tol):
        out = out + z * d
        total = total + d
    if fro(total - np.eye(n)) > tol * n:
        raise InvalidFamily("family does not reach the identity")
    return out


def grid_to_spectral(grid: GridFamily, tol=1e-8) -> SpectralData:
    pairs = list(family_increments(grid, tol))
    return SpectralData(tuple(z for z, _ in pairs), tuple(d for _, d in pairs), tol)


def unitary_flow(a: SpectralData, t: float, tol=1e-9) -> np.ndarray:
    if not a.is_hermitian(tol):
        bad = max(abs(v.imag) for v in a.eigenvalues)
        raise ComplexEigenvalue(f"generator has |Im lambda| = {bad:.3e}")
    return sum(np.exp(1j * v.real * t) * p.matrix for v, p in a.pairs)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_normal(eigenvalues, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(len(eigenvalues), rng)
    return u @ np.diag(np.asarray(eigenvalues, dtype=complex)) @ dagger(u)
