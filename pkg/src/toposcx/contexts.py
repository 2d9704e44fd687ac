"""Contexts of commuting observables and the poset of their coarsenings.

Each context also carries its points (characters), one per atom.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidFamily,
    NonCommuting,
    NotASubcontext,
    OperatorNotInContext,
    TooManyAtoms,
    TrivialContext,
)
from .linops import (
    Projector,
    as_matrix,
    commutator_norm,
    default_tol,
    eigh,
    fro,
    normal_spectral_decomposition,
    proj_leq,
)

MAX_SEED_ATOMS = 6


@dataclass(frozen=True, eq=False)
class Context:
    """A commutative algebra given by its minimal projections (atoms)."""

    atoms: tuple
    label: str = "V"
    tol: float = 1e-8

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Projector) else Projector(a, self.tol) for a in self.atoms)
        if len(atoms) < 2:
            raise TrivialContext("a context needs at least two atoms")
        n = atoms[0].dim
        if any(a.dim != n for a in atoms):
            raise DimensionMismatch("atoms of different dimension")
        if any(a.rank == 0 for a in atoms):
            raise InvalidFamily("zero atom")
        if fro(sum(a.matrix for a in atoms) - np.eye(n)) > self.tol * n:
            raise InvalidFamily("atoms do not sum to the identity")
        for i in range(len(atoms)):
            for j in range(i + 1, len(atoms)):
                if fro(atoms[i].matrix @ atoms[j].matrix) > self.tol * n:
                    raise InvalidFamily("atoms are not orthogonal")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dim(self) -> int:
        return self.atoms[0].dim

    @property
    def size(self) -> int:
        return len(self.atoms)

    def element(self, mask: int) -> np.ndarray:
        """Projection onto the atoms selected by a bitmask."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i, a in enumerate(self.atoms):
            if mask >> i & 1:
                out = out + a.matrix
        return out

    def elements(self) -> Iterator[tuple]:
        for mask in range(1 << self.size):
            yield mask, self.element(mask)

    def coordinates(self, a, tol=None) -> tuple:
        """Per-atom values of ``a`` if it lies in the span of the atoms."""
        a = as_matrix(a)
        tol = default_tol(a) if tol is None else tol
        vals = tuple(complex(np.trace(p.matrix @ a) / p.rank) for p in self.atoms)
        back = sum(v * p.matrix for v, p in zip(vals, self.atoms))
        if fro(back - a) > tol:
            raise OperatorNotInContext(f"operator is {fro(back - a):.3e} away from the context {self.label}")
        return vals

    def contains(self, a, tol=None) -> bool:
        try:
            self.coordinates(a, tol)
        except OperatorNotInContext:
            return False
        return True

    def same_as(self, other: "Context") -> bool:
        return is_subcontext(self, other) and is_subcontext(other, self)


def _range_projector(m: np.ndarray) -> np.ndarray:
    herm = (m + m.conj().T) / 2
    w, v = eigh(herm, tol=1e-6)
    keep = v[:, w > 0.5]
    return keep @ keep.conj().T


def context_from_operators(ops, tol=None, label="V") -> Context:
    mats = [as_matrix(o) for o in ops]
    if not mats:
        raise TrivialContext("no operators given")
    n = mats[0].shape[0]
    if any(m.shape[0] != n for m in mats):
        raise DimensionMismatch("operators of different dimension")
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            r = commutator_norm(mats[i], mats[j])
            t = tol if tol is not None else 1e-9 * max(1.0, fro(mats[i]) * fro(mats[j]))
            if r > t:
                raise NonCommuting(i, j, r)
    current = [np.eye(n, dtype=complex)]
    for m in mats:
        sd, _ = normal_spectral_decomposition(m, tol)
        refined = []
        for a in current:
            for p in sd.projectors:
                prod = a @ p.matrix
                if np.trace(prod).real > 0.5:
                    refined.append(_range_projector(prod))
        current = refined
    if len(current) < 2:
        raise TrivialContext("the operators generate only multiples of the identity")
    return Context(tuple(current), label)


def refinement(sub: Context, ctx: Context, tol=1e-8) -> tuple:
    """Express each atom of ``sub`` as a bitmask of atoms of ``ctx``."""
    if sub.dim != ctx.dim:
        raise DimensionMismatch("contexts of different dimension")
    out = []
    for a in sub.atoms:
        mask = 0
        for i, b in enumerate(ctx.atoms):
            if proj_leq(b.matrix, a.matrix, tol):
                mask |= 1 << i
        if fro(ctx.element(mask) - a.matrix) > tol:
            raise NotASubcontext(f"{sub.label} is not contained in {ctx.label}")
        out.append(mask)
    return tuple(out)


def is_subcontext(sub: Context, ctx: Context, tol=1e-8) -> bool:
    try:
        refinement(sub, ctx, tol)
    except NotASubcontext:
        return False
    return True


def set_partitions(k: int) -> Iterator[tuple]:
    """All partitions of ``range(k)``; each block is a bitmask, blocks sorted."""

    def rec(i, blocks):
        if i == k:
            yield tuple(sorted(blocks))
            return
        for b in range(len(blocks)):
            blocks[b] |= 1 << i
            yield from rec(i + 1, blocks)
            blocks[b] &= ~(1 << i)
        blocks.append(1 << i)
        yield from rec(i + 1, blocks)
        blocks.pop()

    if k == 0:
        yield ()
        return
    yield from rec(0, [])


def coarser_or_equal(fine: tuple, coarse: tuple) -> bool:
    """Every block of ``fine`` sits inside some block of ``coarse``."""
    return all(any(b & ~c == 0 for c in coarse) for b in fine)


def _partition_label(blocks: tuple, k: int) -> str:
    parts = []
    for b in blocks:
        parts.append("".join(str(i) for i in range(k) if b >> i & 1))
    return "|".join(parts)


@dataclass(frozen=True, eq=False)
class ContextPoset:
    """Seed context together with all of its coarsenings into two or more blocks.

    ``blocks[i]`` is the partition of the seed atoms defining context ``i``;
    ``order`` holds ``(i, j)`` whenever context ``i`` is contained in ``j``.
    """

    contexts: tuple
    blocks: tuple
    order: frozenset

    @property
    def seed(self) -> Context:
        return self.contexts[0]

    def __len__(self):
        return len(self.contexts)

    def index(self, key) -> int:
        if isinstance(key, int):
            return key
        if isinstance(key, Context):
            for i, c in enumerate(self.contexts):
                if c is key:
                    return i
            key = key.label
        for i, c in enumerate(self.contexts):
            if c.label == key:
                return i
        raise KeyError(key)

    def labels(self):
        return [c.label for c in self.contexts]

    def leq(self, a, b) -> bool:
        return (self.index(a), self.index(b)) in self.order

    def down_set(self, key) -> list:
        j = self.index(key)
        return [i for i in range(len(self.contexts)) if (i, j) in self.order]

    def strict_pairs(self, within=None):
        """Pairs ``(small, big)`` with ``small`` strictly inside ``big``."""
        allowed = None if within is None else set(within)
        for i, j in sorted(self.order):
            if i != j and (allowed is None or (i in allowed and j in allowed)):
                yield i, j

    def chains(self, key):
        """Maximal chains starting at ``key`` and descending through ``down_set``."""
        start = self.index(key)

        def covers_below(j):
            below = [i for i in self.down_set(j) if i != j]
            return [i for i in below if not any(m != i and (i, m) in self.order and m in below for m in below)]

        def rec(path):
            nxt = covers_below(path[-1])
            if not nxt:
                yield list(path)
                return
            for i in nxt:
                yield from rec(path + [i])

        yield from rec([start])

    def seed_mask(self, ctx_index: int, atom_index: int) -> int:
        return self.blocks[ctx_index][atom_index]


def generate_poset(seed: Context) -> ContextPoset:
    k = seed.size
    if k > MAX_SEED_ATOMS:
        raise TooManyAtoms(f"{k} atoms; at most {MAX_SEED_ATOMS} supported")
    finest = tuple(1 << i for i in range(k))
    parts = [p for p in set_partitions(k) if len(p) >= 2 and p != finest]
    parts.sort(key=lambda p: (-len(p), p))
    parts.insert(0, finest)
    contexts = [seed]
    for p in parts[1:]:
        atoms = tuple(seed.element(b) for b in p)
        contexts.append(Context(atoms, f"{seed.label}[{_partition_label(p, k)}]"))
    order = frozenset(
        (i, j) for i, pi in enumerate(parts) for j, pj in enumerate(parts) if coarser_or_equal(pj, pi)
    )
    return ContextPoset(tuple(contexts), tuple(parts), order)


@dataclass(frozen=True, eq=False)
class GelfandPoint:
    """Character of a context: picks out one atom and reads off its eigenvalue."""

    context: Context
    atom_index: int

    @property
    def atom(self) -> Projector:
        return self.context.atoms[self.atom_index]

    def evaluate(self, a, tol=None) -> complex:
        return self.context.coordinates(a, tol)[self.atom_index]

    def restrict(self, sub: Context, tol=1e-8) -> "GelfandPoint":
        masks = refinement(sub, self.context, tol)
        for i, m in enumerate(masks):
            if m >> self.atom_index & 1:
                return GelfandPoint(sub, i)
        raise NotASubcontext("atom not covered")  # unreachable for valid contexts

    def __eq__(self, other):
        if not isinstance(other, GelfandPoint):
            return NotImplemented
        return self.context is other.context and self.atom_index == other.atom_index

    def __hash__(self):
        return hash((id(self.context), self.atom_index))

    def __repr__(self):
        return f"GelfandPoint({self.context.label}, {self.atom_index})"


def gelfand_spectrum(ctx: Context) -> list:
    return [GelfandPoint(ctx, i) for i in range(ctx.size)]


def gelfand_transform(ctx: Context, a, tol=None) -> dict:
    """Map each point of the spectrum to the value of ``a`` there."""
    vals = ctx.coordinates(a, tol)
    return {GelfandPoint(ctx, i): v for i, v in enumerate(vals)}
