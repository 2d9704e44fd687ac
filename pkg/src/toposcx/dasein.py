"""Approximating projections and normal operators inside a context.

Both matrix contexts (:class:`Context`) and abstract ones (:class:`SubLattice`
of a :class:`FiniteLattice`) are supported.  For operators there are two
independent evaluation paths: rebuilding the operator from the pointwise
approximated spectral family, and reading the eigenvalue of every atom from
the observable (or antonymous) function on the cone of that atom.  The second
path is always well defined and wins when the two disagree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .contexts import Context, ContextPoset, GelfandPoint
from .corder import rank
from .errors import (
    DownSetMismatch,
    InconsistentFamily,
    InvalidFamily,
    NotInImage,
    PointNotInContext,
)
from .filters import (
    Filter,
    FiniteLattice,
    HilbertCone,
    LatticeSpectralFamily,
    antonymous_function,
    bits,
    check_embedding,
    observable_function,
)
from .linops import (
    GridFamily,
    Projector,
    SpectralData,
    TwoParamSpectralFamily,
    as_spectral,
    fro,
    proj_leq,
    reconstruct_operator,
    spectral_family,
)

log = logging.getLogger(__name__)

INNER = "inner"
OUTER = "outer"


@dataclass(frozen=True, eq=False)
class SubLattice:
    """Boolean sublattice of an abstract lattice, given by its atoms as blocks."""

    lattice: FiniteLattice
    blocks: tuple
    label: str = "V"

    def __post_init__(self):
        check_embedding(FiniteLattice(tuple(range(len(self.blocks)))), self.lattice, tuple(self.blocks))

    @property
    def size(self) -> int:
        return len(self.blocks)

    def elements(self):
        for sel in range(1 << self.size):
            yield sum(self.blocks[i] for i in bits(sel))

    def contains(self, x: int) -> bool:
        return self.outer(x) == x

    def outer(self, x: int) -> int:
        return sum(b for b in self.blocks if b & x)

    def inner(self, x: int) -> int:
        return sum(b for b in self.blocks if b & ~x == 0)


def outer_das_projection(p, ctx, tol=1e-8):
    """Smallest element of the context lying above ``p``."""
    if isinstance(ctx, SubLattice):
        m = ctx.lattice.top
        for q in ctx.elements():
            if FiniteLattice.leq(p, q):
                m &= q
        return m
    pm = p.matrix if isinstance(p, Projector) else np.asarray(p, dtype=complex)
    mask = (1 << ctx.size) - 1
    for q_mask, q in ctx.elements():
        if proj_leq(pm, q, tol):
            mask &= q_mask
    return Projector(ctx.element(mask))


def inner_das_projection(p, ctx, tol=1e-8):
    """Largest element of the context lying below ``p``."""
    if isinstance(ctx, SubLattice):
        m = 0
        for q in ctx.elements():
            if FiniteLattice.leq(q, p):
                m |= q
        return m
    pm = p.matrix if isinstance(p, Projector) else np.asarray(p, dtype=complex)
    mask = 0
    for q_mask, q in ctx.elements():
        if proj_leq(q, pm, tol):
            mask |= q_mask
    return Projector(ctx.element(mask))


def das_spectral_family(family, ctx, mode: str) -> GridFamily:
    """Apply projection daseinisation to every value of a step family.

    ``mode="inner"`` applies the largest-below map, ``mode="outer"`` the
    smallest-above map.  Step families are right-continuous, so the limit
    from above of the outer map at a grid point is its value there.
    """
    if mode not in (INNER, OUTER):
        raise ValueError(f"mode must be {INNER!r} or {OUTER!r}")
    fn = inner_das_projection if mode == INNER else outer_das_projection
    if isinstance(family, LatticeSpectralFamily):
        vals = tuple(tuple(fn(family(e, h), ctx) for h in family.imag_cuts) for e in family.real_cuts)
        return GridFamily(family.real_cuts, family.imag_cuts, vals, 0)
    if isinstance(family, SpectralData):
        family = spectral_family(family)
    n = family.dim
    vals = tuple(tuple(fn(family(e, h), ctx).matrix for h in family.imag_cuts) for e in family.real_cuts)
    return GridFamily(family.real_cuts, family.imag_cuts, vals, np.zeros((n, n), dtype=complex))


def lattice_grid_values(grid: GridFamily, lattice: FiniteLattice) -> tuple:
    """Per-atom eigenvalue of a lattice-valued grid family.

    Each atom must occupy a single quadrant of the grid; a staircase shaped
    region has no single eigenvalue and raises InvalidFamily.
    """
    out = []
    J, K = len(grid.eps), len(grid.eta)
    for i in range(lattice.size):
        cells = {(j, k) for j in range(J) for k in range(K) if grid.values[j][k] >> i & 1}
        if not cells:
            raise InvalidFamily(f"atom {lattice.atoms[i]} never enters the family")
        j0 = min(j for j, _ in cells)
        k0 = min(k for _, k in cells)
        quadrant = {(j, k) for j in range(j0, J) for k in range(k0, K)}
        if cells != quadrant:
            raise InvalidFamily(f"atom {lattice.atoms[i]} occupies a staircase, not a quadrant")
        out.append(complex(grid.eps[j0], grid.eta[k0]))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class DaseinisedOperator:
    context: object
    inner: object
    outer: object
    diagnostics: tuple = field(default=())


def _cone_values(a, ctx, fn) -> tuple:
    """Evaluate ``fn`` on the cone of every atom of the context."""
    if isinstance(ctx, SubLattice):
        return tuple(fn(a, Filter.principal(ctx.lattice, b)) for b in ctx.blocks)
    return tuple(fn(a, HilbertCone((atom.matrix,))) for atom in ctx.atoms)


def _das_operator(a, ctx, mode, strict):
    """Shared driver: ``mode`` is the projection map applied to the family."""
    cross_fn = observable_function if mode == INNER else antonymous_function
    notes = []
    if isinstance(a, LatticeSpectralFamily):
        lat = a.lattice
        cross = _cone_values(a, ctx, cross_fn)
        per_atom = [None] * lat.size
        for b, v in zip(ctx.blocks, cross):
            for i in bits(b):
                per_atom[i] = v
        result = LatticeSpectralFamily.from_atom_values(lat, per_atom)
        try:
            primary = lattice_grid_values(das_spectral_family(a, ctx, mode), lat)
            if tuple(primary) != tuple(per_atom):
                notes.append(f"family path gives {primary}, cone path gives {tuple(per_atom)}")
        except InvalidFamily as exc:
            notes.append(f"family path: {exc}")
    else:
        sd = as_spectral(a)
        cross = _cone_values(sd, ctx, cross_fn)
        result = sum(v * atom.matrix for v, atom in zip(cross, ctx.atoms))
        try:
            primary = reconstruct_operator(das_spectral_family(sd, ctx, mode))
            if fro(primary - result) > 1e-8 * max(1.0, fro(result)):
                notes.append(f"family path differs from cone path by {fro(primary - result):.3e}")
        except InvalidFamily as exc:
            notes.append(f"family path: {exc}")
    if notes:
        label = getattr(ctx, "label", "?")
        msg = f"daseinisation in {label}: " + "; ".join(notes)
        if strict:
            raise InconsistentFamily(msg)
        log.warning(msg)
    return result, tuple(notes)


def outer_das_normal(a, ctx, strict=False):
    """Smallest approximation from above: spectral family approximated from below."""
    return _das_operator(a, ctx, INNER, strict)[0]


def inner_das_normal(a, ctx, strict=False):
    """Largest approximation from below: spectral family approximated from above."""
    return _das_operator(a, ctx, OUTER, strict)[0]


def daseinise(a, ctx, strict=False) -> DaseinisedOperator:
    outer, n1 = _das_operator(a, ctx, INNER, strict)
    inner, n2 = _das_operator(a, ctx, OUTER, strict)
    return DaseinisedOperator(ctx, inner, outer, n1 + n2)


def _check_monotone(down_set, order, values, reverse, tol, name):
    for small, big in order:
        if small == big:
            continue
        lo, hi = rank(values[small]), rank(values[big])
        ok = lo >= hi - tol if reverse else lo <= hi + tol
        if not ok:
            raise InvalidFamily(f"{name} breaks monotonicity between {small} and {big}")


@dataclass(frozen=True, eq=False)
class QuantityValue:
    """Order-preserving ``mu`` and order-reversing ``nu`` on a down-set of contexts.

    ``order`` holds label pairs ``(small, big)`` for inclusions inside the down-set.
    """

    down_set: tuple
    order: frozenset
    mu: Mapping
    nu: Mapping
    tol: float = 1e-9

    def __post_init__(self):
        ds = tuple(self.down_set)
        object.__setattr__(self, "down_set", ds)
        object.__setattr__(self, "order", frozenset(self.order))
        object.__setattr__(self, "mu", {k: complex(self.mu[k]) for k in ds})
        object.__setattr__(self, "nu", {k: complex(self.nu[k]) for k in ds})
        _check_monotone(ds, self.order, self.mu, False, self.tol, "mu")
        _check_monotone(ds, self.order, self.nu, True, self.tol, "nu")
        for k in ds:
            if rank(self.mu[k]) > rank(self.nu[k]) + self.tol:
                raise InvalidFamily(f"mu exceeds nu at {k}")

    @property
    def top(self):
        return self.down_set[0]

    def is_real(self, tol=0.0) -> bool:
        return all(abs(v.imag) <= tol for d in (self.mu, self.nu) for v in d.values())

    def restrict(self, label) -> "QuantityValue":
        ds = tuple(k for k in self.down_set if (k, label) in self.order)
        order = frozenset((a, b) for a, b in self.order if a in ds and b in ds)
        return QuantityValue(ds, order, {k: self.mu[k] for k in ds}, {k: self.nu[k] for k in ds}, self.tol)

    def close_to(self, other: "QuantityValue", tol=1e-9) -> bool:
        return self.down_set == other.down_set and all(
            abs(self.mu[k] - other.mu[k]) <= tol and abs(self.nu[k] - other.nu[k]) <= tol for k in self.down_set
        )

    @classmethod
    def constant(cls, down_set, order, mu, nu) -> "QuantityValue":
        return cls(down_set, order, {k: mu for k in down_set}, {k: nu for k in down_set})


def quantity_arrow(a, poset: ContextPoset, ctx, point: GelfandPoint, strict=False) -> QuantityValue:
    """Values of the inner and outer approximations of ``a`` at ``point`` over the down-set."""
    i = poset.index(ctx)
    top = poset.contexts[i]
    if point.context is not top:
        raise PointNotInContext(f"point lives in {point.context.label}, not {top.label}")
    sd = as_spectral(a)
    down = poset.down_set(i)
    down.sort(key=lambda j: (j != i, j))
    labels = tuple(poset.contexts[j].label for j in down)
    order = frozenset(
        (poset.contexts[s].label, poset.contexts[b].label) for s, b in poset.order if s in down and b in down
    )
    mu, nu = {}, {}
    for j in down:
        sub = poset.contexts[j]
        pt = point.restrict(sub)
        d = daseinise(sd, sub, strict)
        mu[sub.label] = pt.evaluate(d.inner)
        nu[sub.label] = pt.evaluate(d.outer)
    return QuantityValue(labels, order, mu, nu)


def _same_shape(x: QuantityValue, y: QuantityValue):
    if x.down_set != y.down_set or x.order != y.order:
        raise DownSetMismatch("quantity values live over different down-sets")


def embed_real_pairs(p1: QuantityValue, p2: QuantityValue) -> QuantityValue:
    _same_shape(p1, p2)
    if not (p1.is_real() and p2.is_real()):
        raise InvalidFamily("embedding expects real-valued pairs")
    ds = p1.down_set
    return QuantityValue(
        ds,
        p1.order,
        {k: p1.mu[k] + 1j * p2.mu[k] for k in ds},
        {k: p1.nu[k] + 1j * p2.nu[k] for k in ds},
    )


def split_complex_pair(q: QuantityValue) -> tuple:
    """Inverse of :func:`embed_real_pairs` on its image."""
    ds = q.down_set
    try:
        re = QuantityValue(ds, q.order, {k: q.mu[k].real for k in ds}, {k: q.nu[k].real for k in ds})
        im = QuantityValue(ds, q.order, {k: q.mu[k].imag for k in ds}, {k: q.nu[k].imag for k in ds})
    except InvalidFamily as exc:
        raise NotInImage(f"real or imaginary part is not a real quantity value: {exc}") from None
    return re, im


def add_quantity(x: QuantityValue, y: QuantityValue) -> QuantityValue:
    _same_shape(x, y)
    ds = x.down_set
    return QuantityValue(ds, x.order, {k: x.mu[k] + y.mu[k] for k in ds}, {k: x.nu[k] + y.nu[k] for k in ds})


def zero_quantity(like: QuantityValue) -> QuantityValue:
    return QuantityValue.constant(like.down_set, like.order, 0, 0)


def family_geq(grid: GridFamily, family, tol=1e-8) -> bool:
    """Every value of ``grid`` lies above the corresponding value of ``family``."""
    eps = sorted(set(grid.eps) | set(family.real_cuts))
    eta = sorted(set(grid.eta) | set(family.imag_cuts))
    for e in eps:
        for h in eta:
            g, f = grid(e, h), family(e, h)
            if isinstance(g, (int, np.integer)):
                if not FiniteLattice.leq(int(f), int(g)):
                    return False
            elif not proj_leq(f, g, tol):
                return False
    return True
