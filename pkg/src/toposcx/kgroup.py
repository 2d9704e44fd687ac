"""Formal differences of monotone context functions and the flows they label.

The module also recovers a self-adjoint generator from sampled unitary flows.

A fibre element lives on a down-set of contexts.  Four monoids are covered:

* ``R>=`` / ``C>=``: one order-reversing function (real or complex valued),
* ``R<->`` / ``C<->``: an order-preserving and an order-reversing function
  with the first below the second.

Complex values are compared through ``Re + Im``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .contexts import ContextPoset
from .corder import rank
from .dasein import QuantityValue, outer_das_normal
from .errors import (
    BranchAmbiguity,
    DownSetMismatch,
    InconsistentSamples,
    InsufficientSamples,
    OutsideMonoid,
)
from .linops import (
    SpectralData,
    as_spectral,
    commutator_norm,
    fro,
    normal_spectral_decomposition,
    unitary_flow,
)

KINDS = {
    # kind: (variance per component, real valued)
    "R>=": (("reversing",), True),
    "C>=": (("reversing",), False),
    "R<->": (("preserving", "reversing"), True),
    "C<->": (("preserving", "reversing"), False),
}

BRANCH_GUARD = 1e-6
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class Fibre:
    """Down-set of contexts (root first) with its inclusion pairs and monoid kind."""

    labels: tuple
    order: frozenset  # (small, big) index pairs, reflexive
    kind: str = "C>="

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown monoid kind {self.kind!r}")

    @classmethod
    def from_poset(cls, poset: ContextPoset, ctx=0, kind="C>=") -> "Fibre":
        top = poset.index(ctx)
        down = sorted(poset.down_set(top), key=lambda j: (j != top, j))
        pos = {j: i for i, j in enumerate(down)}
        order = frozenset((pos[a], pos[b]) for a, b in poset.order if a in pos and b in pos)
        return cls(tuple(poset.contexts[j].label for j in down), order, kind)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def variance(self) -> tuple:
        return KINDS[self.kind][0]

    @property
    def real(self) -> bool:
        return KINDS[self.kind][1]

    def strict_pairs(self):
        return sorted((a, b) for a, b in self.order if a != b)

    @cached_property
    def co_height(self) -> tuple:
        """Length of the longest chain from each context up to the root."""
        h = [0] * self.size
        for _ in range(self.size):
            for a, b in self.strict_pairs():
                h[a] = max(h[a], h[b] + 1)
        return tuple(h)

    def with_kind(self, kind: str) -> "Fibre":
        return Fibre(self.labels, self.order, kind)

    def restrict(self, label) -> "Fibre":
        j = self.labels.index(label)
        keep = [i for i in range(self.size) if (i, j) in self.order]
        keep.sort(key=lambda i: (i != j, i))
        pos = {i: n for n, i in enumerate(keep)}
        order = frozenset((pos[a], pos[b]) for a, b in self.order if a in pos and b in pos)
        return Fibre(tuple(self.labels[i] for i in keep), order, self.kind), keep


def _violations(fibre: Fibre, values: np.ndarray, tol: float) -> list:
    out = []
    for c, var in enumerate(fibre.variance):
        for a, b in fibre.strict_pairs():
            lo, hi = rank(values[c, a]), rank(values[c, b])
            if var == "reversing" and lo < hi - tol:
                out.append(f"component {c} rises from {fibre.labels[a]} to {fibre.labels[b]}")
            if var == "preserving" and lo > hi + tol:
                out.append(f"component {c} falls from {fibre.labels[a]} to {fibre.labels[b]}")
    if values.shape[0] == 2:
        for i in range(fibre.size):
            if rank(values[0, i]) > rank(values[1, i]) + tol:
                out.append(f"lower component exceeds upper at {fibre.labels[i]}")
    if fibre.real and np.any(np.abs(values.imag) > 0):
        out.append("complex value in a real fibre")
    return out


@dataclass(frozen=True, eq=False)
class MonoidElem:
    fibre: Fibre
    values: np.ndarray  # shape (components, contexts)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).reshape(len(self.fibre.variance), self.fibre.size)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        bad = _violations(self.fibre, v, 1e-12 * max(1.0, float(np.max(np.abs(v), initial=0.0))))
        if bad:
            raise OutsideMonoid("; ".join(bad))

    @classmethod
    def zero(cls, fibre: Fibre) -> "MonoidElem":
        return cls(fibre, np.zeros((len(fibre.variance), fibre.size)))

    @classmethod
    def constant(cls, fibre: Fibre, c) -> "MonoidElem":
        return cls(fibre, np.full((len(fibre.variance), fibre.size), c, dtype=complex))

    @classmethod
    def from_quantity(cls, q: QuantityValue, fibre: Fibre) -> "MonoidElem":
        vals = np.array([[q.mu[k] for k in fibre.labels], [q.nu[k] for k in fibre.labels]])
        return cls(fibre, vals)

    def __add__(self, other: "MonoidElem") -> "MonoidElem":
        _same_fibre(self.fibre, other.fibre)
        return MonoidElem(self.fibre, self.values + other.values)

    def close_to(self, other: "MonoidElem", tol=DEFAULT_TOL) -> bool:
        return self.fibre == other.fibre and float(np.max(np.abs(self.values - other.values))) <= tol

    def restrict(self, label) -> "MonoidElem":
        fib, keep = self.fibre.restrict(label)
        return MonoidElem(fib, self.values[:, keep])


def _same_fibre(a: Fibre, b: Fibre):
    if a != b:
        raise DownSetMismatch("elements live on different fibres")


def canonical_pair(fibre: Fibre, diff: np.ndarray) -> tuple:
    """Deterministic representative ``(diff + s, s)`` of the class with difference ``diff``.

    ``s`` is real, grows by a fixed step per inclusion level in the direction
    each component requires, and the upper component is lifted by a constant
    so that both entries stay in the monoid.
    """
    diff = np.asarray(diff, dtype=complex).reshape(len(fibre.variance), fibre.size)
    h = np.array(fibre.co_height, dtype=float)
    step = 0.0
    for c, var in enumerate(fibre.variance):
        for a, b in fibre.strict_pairs():
            gap = rank(diff[c, b]) - rank(diff[c, a])
            need = gap if var == "reversing" else -gap
            step = max(step, need / (h[a] - h[b]))
    s = np.zeros(diff.shape)
    for c, var in enumerate(fibre.variance):
        s[c] = step * h if var == "reversing" else -step * h
    if diff.shape[0] == 2:
        lift = max(0.0, max(rank(diff[0, i] - diff[1, i]) - 2 * step * h[i] for i in range(fibre.size)))
        s[1] += lift
    return MonoidElem(fibre, diff + s), MonoidElem(fibre, s)


@dataclass(frozen=True, eq=False)
class KPair:
    """Class ``[pos, neg]``, read as the formal difference ``pos - neg``."""

    pos: MonoidElem
    neg: MonoidElem

    def __post_init__(self):
        _same_fibre(self.pos.fibre, self.neg.fibre)

    @property
    def fibre(self) -> Fibre:
        return self.pos.fibre

    def difference(self) -> np.ndarray:
        return self.pos.values - self.neg.values

    @classmethod
    def from_difference(cls, fibre: Fibre, diff) -> "KPair":
        return cls(*canonical_pair(fibre, diff))

    @classmethod
    def zero(cls, fibre: Fibre) -> "KPair":
        z = MonoidElem.zero(fibre)
        return cls(z, z)

    def canonical(self) -> "KPair":
        return KPair.from_difference(self.fibre, self.difference())

    def __eq__(self, other):
        if not isinstance(other, KPair):
            return NotImplemented
        return k_equiv(self, other)

    __hash__ = None

    def __add__(self, other):
        return k_add(self, other)

    def __neg__(self):
        return k_neg(self)

    def restrict(self, label) -> "KPair":
        return KPair(self.pos.restrict(label), self.neg.restrict(label))


def k_equiv(x: KPair, y: KPair, tol=DEFAULT_TOL) -> bool:
    """``a + d = b + c`` for ``x = [a, b]`` and ``y = [c, d]``; scalar fibres cancel."""
    _same_fibre(x.fibre, y.fibre)
    lhs = x.pos.values + y.neg.values
    rhs = x.neg.values + y.pos.values
    return float(np.max(np.abs(lhs - rhs))) <= tol


def k_add(x: KPair, y: KPair) -> KPair:
    return KPair(x.pos + y.pos, x.neg + y.neg)


def k_neg(x: KPair) -> KPair:
    return KPair(x.neg, x.pos)


def k_sub(x: KPair, y: KPair) -> KPair:
    return k_add(x, k_neg(y))


def theta(a: MonoidElem) -> KPair:
    return KPair(a, MonoidElem.zero(a.fibre))


def _scaled(fibre: Fibre, values) -> MonoidElem:
    return MonoidElem(fibre, values)


def scalar_mul(z, x: KPair) -> KPair:
    """Multiply a class by a real or complex constant.

    Non-negative rank keeps the orientation ``[z pos, z neg]``; negative rank
    swaps it to ``[-z neg, -z pos]``.  Both give the class of ``z (pos - neg)``.
    When the literal representative leaves the monoid the canonical one is used.
    """
    z = complex(z)
    if x.fibre.real and z.imag != 0:
        raise OutsideMonoid("complex scalar on a real fibre; complexify first")
    if x.fibre.real:
        z = complex(z.real, 0.0)
    try:
        if rank(z) >= 0:
            return KPair(_scaled(x.fibre, z * x.pos.values), _scaled(x.fibre, z * x.neg.values))
        return KPair(_scaled(x.fibre, -z * x.neg.values), _scaled(x.fibre, -z * x.pos.values))
    except OutsideMonoid:
        return KPair.from_difference(x.fibre, z * x.difference())


def k_conjugate(x: KPair) -> KPair:
    """Entrywise complex conjugation of a class over a complex fibre."""
    try:
        return KPair(_scaled(x.fibre, np.conj(x.pos.values)), _scaled(x.fibre, np.conj(x.neg.values)))
    except OutsideMonoid:
        return KPair.from_difference(x.fibre, np.conj(x.difference()))


def complexify(x: KPair) -> KPair:
    """View a class over a real fibre as one over the matching complex fibre."""
    kind = {"R>=": "C>=", "R<->": "C<->"}.get(x.fibre.kind, x.fibre.kind)
    fib = x.fibre.with_kind(kind)
    return KPair(MonoidElem(fib, x.pos.values), MonoidElem(fib, x.neg.values))


def induced_morphism(additive):
    """Group map ``[a, b] -> additive(a) - additive(b)`` induced by an additive ``additive``."""

    def induced(x: KPair):
        return additive(x.pos) - additive(x.neg)

    return induced


@dataclass(frozen=True, eq=False)
class FlowElem:
    """Group element labelled by a class; optionally carries a self-adjoint generator."""

    tag: KPair
    generator: SpectralData | None = None

    @property
    def fibre(self) -> Fibre:
        return self.tag.fibre

    def __eq__(self, other):
        if not isinstance(other, FlowElem):
            return NotImplemented
        return self.generator is other.generator and k_equiv(self.tag, other.tag)

    __hash__ = None

    def restrict(self, label) -> "FlowElem":
        return FlowElem(self.tag.restrict(label), self.generator)

    def parameter(self, tol=DEFAULT_TOL) -> float:
        """The real time ``t`` when the tag is a real constant class."""
        d = self.tag.difference()
        t = d.flat[0]
        if np.max(np.abs(d - t)) > tol or abs(t.imag) > tol:
            raise ValueError("flow is not labelled by a real constant")
        return t.real

    def unitary(self) -> np.ndarray:
        if self.generator is None:
            raise ValueError("flow has no generator")
        return unitary_flow(self.generator, self.parameter())


def flow_compose(a: FlowElem, b: FlowElem) -> FlowElem:
    if a.generator is not b.generator and a.generator is not None and b.generator is not None:
        raise DownSetMismatch("flows have different generators")
    return FlowElem(k_add(a.tag, b.tag), a.generator or b.generator)


def identity_flow(fibre: Fibre, generator=None) -> FlowElem:
    return FlowElem(KPair.zero(fibre), generator)


def flow_inverse(a: FlowElem) -> FlowElem:
    return FlowElem(k_neg(a.tag), a.generator)


def as_flow(x: KPair, generator=None) -> FlowElem:
    return FlowElem(x, generator)


def embed_reals(r: float, fibre: Fibre, generator=None) -> FlowElem:
    """Flow labelled by the constant class ``[r, 0]`` on a real fibre."""
    fib = fibre if fibre.real else fibre.with_kind("R>=" if len(fibre.variance) == 1 else "R<->")
    return FlowElem(theta(MonoidElem.constant(fib, float(r))), generator)


def embed_complex(t: complex, fibre: Fibre) -> FlowElem:
    """Flow labelled by the constant class ``[t, 0]`` on a complex fibre."""
    fib = fibre if not fibre.real else fibre.with_kind("C>=" if len(fibre.variance) == 1 else "C<->")
    return FlowElem(theta(MonoidElem.constant(fib, complex(t))))


def stone_forward(a, ts) -> list:
    sd = as_spectral(a)
    return [unitary_flow(sd, float(t)) for t in ts]


def stone_inverse(samples, tol=1e-9) -> SpectralData:
    """Recover a self-adjoint generator from samples ``(t, U(t))`` of its flow."""
    samples = [(float(t), np.asarray(u, dtype=complex)) for t, u in samples]
    nonzero = [(t, u) for t, u in samples if t != 0]
    if not nonzero:
        raise InsufficientSamples("need at least one sample at a non-zero time")
    t0, u0 = min(nonzero, key=lambda s: (abs(s[0]), s[0]))
    sd, _ = normal_spectral_decomposition(u0)
    vals, projs = [], []
    for w, p in sd.pairs:
        arg = cmath.phase(w)
        if abs(arg) > math.pi - BRANCH_GUARD:
            raise BranchAmbiguity(f"eigenvalue {w:.6g} of U({t0:g}) sits on the branch cut")
        vals.append(arg / t0)
        projs.append(p)
    gen = SpectralData(tuple(vals), tuple(projs))
    by_time = {t: u for t, u in samples}
    for t, u in samples:
        r = fro(u - unitary_flow(gen, t))
        if r > tol * max(1.0, fro(u)) * max(1.0, abs(t)):
            raise InconsistentSamples(f"sample at t={t:g} deviates by {r:.3e} from the recovered flow")
    for s, us in samples:
        for t, ut in samples:
            if s + t in by_time:
                r = fro(us @ ut - by_time[s + t])
                if r > tol * max(1.0, fro(ut)):
                    raise InconsistentSamples(f"U({s:g})U({t:g}) != U({s + t:g}) by {r:.3e}")
    return gen


def commutation_residual(a, u) -> float:
    """Largest commutator norm between ``u`` and the spectral projectors of ``a``."""
    sd = as_spectral(a)
    return max(commutator_norm(p.matrix, u) for p in sd.projectors)


def conjugation_invariance(a, u, poset: ContextPoset) -> float:
    """Largest change of the outer approximation of ``a`` when ``a`` is conjugated by ``u``."""
    sd = as_spectral(a)
    moved = u @ sd.operator() @ u.conj().T
    return max(fro(outer_das_normal(moved, ctx) - outer_das_normal(sd, ctx)) for ctx in poset.contexts)


def algebra_commutation(u, poset: ContextPoset) -> float:
    """Largest commutator of ``u`` with an atom of any context in the poset."""
    return max(commutator_norm(atom.matrix, u) for ctx in poset.contexts for atom in ctx.atoms)
