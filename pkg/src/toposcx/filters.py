"""Filters of finite Boolean projection lattices.

Normal operators define observable and antonymous functions on these filters.

Lattice elements are bitmasks over the atoms: bit ``i`` set means atom ``i``
is below the element.  Meet is ``&``, join is ``|``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .contexts import Context, GelfandPoint, gelfand_spectrum
from .corder import inf_complex, sup_complex
from .errors import (
    FamilyLatticeMismatch,
    InconsistentFamily,
    InvalidFamily,
    NotASublattice,
    NotNormalized,
    TooLarge,
)
from .linops import SpectralData, as_spectral, fro, proj_leq, spectral_family

log = logging.getLogger(__name__)

MAX_FILTER_ATOMS = 5


def fmt_complex(z) -> str:
    z = complex(z)
    re, im = z.real + 0.0, z.imag + 0.0
    if im == 0:
        return f"{re:g}"
    if re == 0:
        return f"{im:g}i"
    return f"{re:g}{im:+g}i"


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(x: int) -> list:
    return [i for i in range(x.bit_length()) if x >> i & 1]


@dataclass(frozen=True, eq=False)
class FiniteLattice:
    """Boolean lattice of subsets of ``atoms``, optionally backed by projectors."""

    atoms: tuple
    projectors: tuple | None = None

    def __post_init__(self):
        if not self.atoms:
            raise InvalidFamily("lattice needs at least one atom")
        if self.projectors is not None and len(self.projectors) != len(self.atoms):
            raise InvalidFamily("one projector per atom required")

    @classmethod
    def from_context(cls, ctx: Context) -> "FiniteLattice":
        return cls(tuple(f"{ctx.label}:{i}" for i in range(ctx.size)), tuple(a.matrix for a in ctx.atoms))

    @classmethod
    def from_spectral(cls, sd: SpectralData) -> "FiniteLattice":
        return cls(tuple(f"E[{fmt_complex(v)}]" for v in sd.eigenvalues), tuple(p.matrix for p in sd.projectors))

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def top(self) -> int:
        return (1 << self.size) - 1

    bottom = 0

    def elements(self) -> range:
        return range(1 << self.size)

    def atom(self, i: int) -> int:
        return 1 << i

    def complement(self, x: int) -> int:
        return self.top & ~x

    @staticmethod
    def leq(x: int, y: int) -> bool:
        return x & ~y == 0

    def label(self, x: int) -> str:
        if x == 0:
            return "0"
        if x == self.top:
            return "1"
        return "{" + ",".join(self.atoms[i] for i in bits(x)) + "}"

    def mask_of(self, names: Iterable[str]) -> int:
        m = 0
        for n in names:
            try:
                m |= 1 << self.atoms.index(n)
            except ValueError:
                raise FamilyLatticeMismatch(f"unknown atom {n!r}") from None
        return m

    @property
    def dim(self) -> int:
        if self.projectors is None:
            raise FamilyLatticeMismatch("abstract lattice has no matrices")
        return np.asarray(self.projectors[0]).shape[0]

    def projector(self, x: int) -> np.ndarray:
        n = self.dim
        out = np.zeros((n, n), dtype=complex)
        for i in bits(x):
            out = out + self.projectors[i]
        return out

    def element_of(self, p, tol=1e-8) -> int:
        """Bitmask of the lattice element equal to the projector ``p``."""
        p = np.asarray(p)
        if self.projectors is None or p.shape != (self.dim, self.dim):
            raise FamilyLatticeMismatch("projector does not act on the lattice's space")
        mask = 0
        for i, a in enumerate(self.projectors or ()):
            if proj_leq(a, p, tol):
                mask |= 1 << i
        if fro(self.projector(mask) - p) > tol * max(1, p.shape[0]):
            raise FamilyLatticeMismatch("projector is not an element of the lattice")
        return mask


@dataclass(frozen=True, eq=False)
class Filter:
    """Proper filter: upward closed, closed under meets, without 0."""

    lattice: FiniteLattice
    members: frozenset

    def __post_init__(self):
        mem = frozenset(self.members)
        object.__setattr__(self, "members", mem)
        lat = self.lattice
        if not mem:
            raise InvalidFamily("filters are non-empty")
        if 0 in mem:
            raise InvalidFamily("0 in filter")
        for x in mem:
            for y in lat.elements():
                if lat.leq(x, y) and y not in mem:
                    raise InvalidFamily("filter not upward closed")
        for x in mem:
            for y in mem:
                if x & y not in mem:
                    raise InvalidFamily("filter not closed under meets")

    @classmethod
    def principal(cls, lattice: FiniteLattice, x: int) -> "Filter":
        return cls(lattice, frozenset(y for y in lattice.elements() if lattice.leq(x, y)))

    @property
    def generator(self) -> int:
        g = self.lattice.top
        for x in self.members:
            g &= x
        return g

    def contains(self, x: int) -> bool:
        return x in self.members

    def admits(self, p) -> bool:
        return self.lattice.element_of(p) in self.members

    def is_maximal(self) -> bool:
        return popcount(self.generator) == 1

    def __eq__(self, other):
        if not isinstance(other, Filter):
            return NotImplemented
        return self.lattice is other.lattice and self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def __le__(self, other: "Filter") -> bool:
        return self.members <= other.members

    def __repr__(self):
        return f"Filter(<{self.lattice.label(self.generator)}>)"


class Quasipoint(Filter):
    """Maximal filter; in a finite Boolean lattice it is principal at an atom."""

    def __post_init__(self):
        super().__post_init__()
        lat = self.lattice
        for x in lat.elements():
            if (x in self.members) == (lat.complement(x) in self.members):
                raise InvalidFamily("not an ultrafilter")

    @property
    def atom_index(self) -> int:
        return bits(self.generator)[0]

    def __repr__(self):
        return f"Quasipoint({self.lattice.atoms[self.atom_index]})"


def _up_sets(lattice: FiniteLattice):
    order = sorted(lattice.elements(), key=lambda x: (-popcount(x), x))
    k = lattice.size
    chosen: set = set()

    def rec(i):
        if i == len(order):
            yield frozenset(chosen)
            return
        x = order[i]
        covers = [x | (1 << b) for b in range(k) if not x >> b & 1]
        yield from rec(i + 1)
        if all(c in chosen for c in covers):
            chosen.add(x)
            yield from rec(i + 1)
            chosen.discard(x)

    yield from rec(0)


def enumerate_filters(lattice: FiniteLattice) -> list:
    """Every proper filter, found by scanning all upward-closed subsets."""
    if lattice.size > MAX_FILTER_ATOMS:
        raise TooLarge(f"{lattice.size} atoms; at most {MAX_FILTER_ATOMS}")
    out = []
    for up in _up_sets(lattice):
        if not up or 0 in up:
            continue
        if all(x & y in up for x in up for y in up):
            out.append(Filter(lattice, up))
    out.sort(key=lambda f: (len(f.members), sorted(f.members)))
    return out


def enumerate_quasipoints(lattice: FiniteLattice) -> list:
    filters = enumerate_filters(lattice)
    maximal = [f for f in filters if not any(f.members < g.members for g in filters)]
    qs = [Quasipoint(lattice, f.members) for f in maximal]
    qs.sort(key=lambda q: q.atom_index)
    return qs


def quasipoint_at(lattice: FiniteLattice, atom_index: int) -> Quasipoint:
    return Quasipoint(lattice, Filter.principal(lattice, 1 << atom_index).members)


def embed_element(x: int, embedding: tuple) -> int:
    out = 0
    for i in bits(x):
        out |= embedding[i]
    return out


def check_embedding(small: FiniteLattice, big: FiniteLattice, embedding: tuple):
    if len(embedding) != small.size:
        raise NotASublattice("embedding needs one block per atom")
    seen = 0
    for b in embedding:
        if b == 0 or b & seen or b & ~big.top:
            raise NotASublattice("blocks must be non-empty and disjoint")
        seen |= b
    if seen != big.top:
        raise NotASublattice("blocks do not cover the larger lattice")


def cone(f: Filter, big: FiniteLattice, embedding: tuple) -> Filter:
    """Smallest filter of ``big`` containing the image of ``f``."""
    check_embedding(f.lattice, big, embedding)
    images = [embed_element(x, embedding) for x in f.members]
    return Filter(big, frozenset(y for y in big.elements() if any(big.leq(x, y) for x in images)))


def restrict_filter(f: Filter, small: FiniteLattice, embedding: tuple) -> Filter:
    check_embedding(small, f.lattice, embedding)
    return Filter(small, frozenset(x for x in small.elements() if embed_element(x, embedding) in f.members))


@dataclass(frozen=True, eq=False)
class HilbertCone:
    """Upper set in the lattice of all projections generated by some projectors."""

    generators: tuple

    def admits(self, p, tol=1e-8) -> bool:
        return any(proj_leq(g, p, tol) for g in self.generators)

    @classmethod
    def of_filter(cls, f: Filter) -> "HilbertCone":
        return cls((f.lattice.projector(f.generator),))


@dataclass(frozen=True, eq=False)
class LatticeSpectralFamily:
    """Product family in an abstract lattice.

    ``re_steps`` lists ``(cut, element)`` with the real-part family equal to
    ``element`` from ``cut`` up to the next cut; below the first cut it is 0.
    """

    lattice: FiniteLattice
    re_steps: tuple
    im_steps: tuple

    def __post_init__(self):
        for steps in (self.re_steps, self.im_steps):
            if not steps:
                raise InvalidFamily("empty family")
            cuts = [c for c, _ in steps]
            if cuts != sorted(cuts) or len(set(cuts)) != len(cuts):
                raise InvalidFamily("cuts must be strictly increasing")
            masks = [m for _, m in steps]
            if any(not FiniteLattice.leq(a, b) for a, b in zip(masks, masks[1:])):
                raise InvalidFamily("family must increase")
            if masks[-1] != self.lattice.top:
                raise InvalidFamily("family must reach the top element")

    @classmethod
    def from_atom_values(cls, lattice: FiniteLattice, values) -> "LatticeSpectralFamily":
        values = [complex(v) for v in values]

        def steps(comp):
            cuts = sorted({comp(v) for v in values})
            return tuple((c, sum(1 << i for i, v in enumerate(values) if comp(v) <= c)) for c in cuts)

        return cls(lattice, steps(lambda z: z.real), steps(lambda z: z.imag))

    @property
    def real_cuts(self):
        return tuple(c for c, _ in self.re_steps)

    @property
    def imag_cuts(self):
        return tuple(c for c, _ in self.im_steps)

    @staticmethod
    def _at(steps, x) -> int:
        out = 0
        for c, m in steps:
            if c <= x:
                out = m
        return out

    def re_part(self, eps) -> int:
        return self._at(self.re_steps, eps)

    def im_part(self, eta) -> int:
        return self._at(self.im_steps, eta)

    def __call__(self, eps, eta) -> int:
        return self.re_part(eps) & self.im_part(eta)

    def atom_values(self) -> tuple:
        """Eigenvalue carried by each atom."""
        out = []
        for i in range(self.lattice.size):
            re = next(c for c, m in self.re_steps if m >> i & 1)
            im = next(c for c, m in self.im_steps if m >> i & 1)
            out.append(complex(re, im))
        return tuple(out)


class _View(NamedTuple):
    eps: tuple
    eta: tuple
    joint: object  # (j, k) -> bool, family value at cut (j, k) is in the filter
    upper: object  # (j, k) -> bool, strict upper quadrant below cut (j, k) is in the filter


def _view(a, filt) -> _View:
    if isinstance(a, LatticeSpectralFamily):
        if not isinstance(filt, Filter) or filt.lattice is not a.lattice:
            raise FamilyLatticeMismatch("family and filter live in different lattices")
        lat = a.lattice
        re = [m for _, m in a.re_steps]
        im = [m for _, m in a.im_steps]

        def prev(lst, j):
            return lst[j - 1] if j > 0 else 0

        return _View(
            a.real_cuts,
            a.imag_cuts,
            lambda j, k: filt.contains(re[j] & im[k]),
            lambda j, k: filt.contains(lat.complement(prev(re, j)) & lat.complement(prev(im, k))),
        )
    sd = as_spectral(a)
    fam = spectral_family(sd)
    n = sd.dim
    eye = np.eye(n)
    re = [fam.re_part(c) for c in fam.real_cuts]
    im = [fam.im_part(c) for c in fam.imag_cuts]

    def prev(lst, j):
        return lst[j - 1] if j > 0 else np.zeros((n, n))

    return _View(
        fam.real_cuts,
        fam.imag_cuts,
        lambda j, k: filt.admits(re[j] @ im[k]),
        lambda j, k: filt.admits((eye - prev(re, j)) @ (eye - prev(im, k))),
    )


def observable_parts(a, filt) -> tuple:
    """Real-part and imaginary-part observable values ``(f_re, f_im)``."""
    v = _view(a, filt)
    J, K = len(v.eps), len(v.eta)
    f_re = min(v.eps[j] for j in range(J) if v.joint(j, K - 1))
    f_im = min(v.eta[k] for k in range(K) if v.joint(J - 1, k))
    return f_re, f_im


def observable_function(a, filt) -> complex:
    """Least spectral value whose family element lies in the filter."""
    v = _view(a, filt)
    J, K = len(v.eps), len(v.eta)
    direct, _ = inf_complex(complex(v.eps[j], v.eta[k]) for j in range(J) for k in range(K) if v.joint(j, k))
    f_re, f_im = observable_parts(a, filt)
    if direct != complex(f_re, f_im):
        raise InconsistentFamily(f"direct infimum {direct} differs from componentwise {complex(f_re, f_im)}")
    return direct


def antonymous_parts(a, filt) -> tuple:
    v = _view(a, filt)
    J, K = len(v.eps), len(v.eta)
    g_re = max(v.eps[j] for j in range(J) if v.upper(j, 0))
    g_im = max(v.eta[k] for k in range(K) if v.upper(0, k))
    return g_re, g_im


def antonymous_function(a, filt) -> complex:
    """Greatest spectral value whose strict upper quadrant lies in the filter."""
    v = _view(a, filt)
    J, K = len(v.eps), len(v.eta)
    direct, _ = sup_complex(complex(v.eps[j], v.eta[k]) for j in range(J) for k in range(K) if v.upper(j, k))
    g_re, g_im = antonymous_parts(a, filt)
    if direct != complex(g_re, g_im):
        raise InconsistentFamily(f"direct supremum {direct} differs from componentwise {complex(g_re, g_im)}")
    return direct


class StateFilter(NamedTuple):
    filter: Filter
    maximal: bool


def state_filter(state, lattice: FiniteLattice, tol=1e-9) -> StateFilter:
    """Lattice elements that contain the state ``state``."""
    state = np.asarray(state, dtype=complex).ravel()
    if abs(np.linalg.norm(state) - 1) > tol:
        raise NotNormalized(f"||state|| = {np.linalg.norm(state):.12g}")
    members = frozenset(x for x in lattice.elements() if np.linalg.norm(lattice.projector(x) @ state - state) <= 1e-9)
    f = Filter(lattice, members)
    return StateFilter(f, f.is_maximal())


def expectation_bounds(a, state, lattice: FiniteLattice | None = None) -> tuple:
    """``(g, <v|A|v>, f)`` evaluated on the filter of lattice elements containing ``state``."""
    sd = as_spectral(a)
    lattice = FiniteLattice.from_spectral(sd) if lattice is None else lattice
    sf = state_filter(state, lattice)
    state = np.asarray(state, dtype=complex).ravel()
    expectation = complex(np.vdot(state, sd.operator() @ state))
    return antonymous_function(sd, sf.filter), expectation, observable_function(sd, sf.filter)


@dataclass(frozen=True, eq=False)
class StoneCorrespondence:
    pairs: tuple  # (GelfandPoint, Quasipoint)
    bijective: bool
    basis_ok: bool


def unit_support(point: GelfandPoint, lattice: FiniteLattice, tol=1e-8) -> frozenset:
    """Lattice elements on which the character takes the value 1."""
    return frozenset(x for x in lattice.elements() if abs(point.evaluate(lattice.projector(x), tol) - 1) <= tol)


def stone_homeomorphism(ctx: Context, tol=1e-8) -> StoneCorrespondence:
    lattice = FiniteLattice.from_context(ctx)
    quasipoints = enumerate_quasipoints(lattice)
    points = gelfand_spectrum(ctx)
    pairs = []
    for point in points:
        members = unit_support(point, lattice, tol)
        match = [q for q in quasipoints if q.members == members]
        pairs.append((point, match[0] if match else None))
    images = [q for _, q in pairs]
    bijective = (
        len(points) == len(quasipoints)
        and all(q is not None for q in images)
        and len({id(q) for q in images}) == len(quasipoints)
    )
    basis_ok = bijective
    if bijective:
        for x in lattice.elements():
            clopen = {id(q) for q in quasipoints if x in q.members}
            char_side = {id(q) for point, q in pairs if abs(point.evaluate(lattice.projector(x), tol) - 1) <= tol}
            if clopen != char_side:
                basis_ok = False
                break
    return StoneCorrespondence(tuple(pairs), bijective, basis_ok)
