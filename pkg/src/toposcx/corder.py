"""Ordering of complex numbers by ``Re + Im`` and of normal operators by
their spectral families.

Closed complex rectangles form the interval domain used for estimates.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, EmptySet, NotDirected
from .linops import SpectralData, as_spectral, cluster_gap, proj_leq, spectral_family


def rank(z) -> float:
    z = complex(z)
    return z.real + z.imag


def canonical_key(z):
    z = complex(z)
    return (z.real + z.imag, z.real, z.imag)


class Order(enum.Enum):
    LESS = "Less"
    EQUIVALENT = "Equivalent"
    GREATER = "Greater"


def cmp_complex(a, b, tol: float = 0.0) -> Order:
    d = rank(a) - rank(b)
    if abs(d) <= tol:
        return Order.EQUIVALENT
    return Order.LESS if d < 0 else Order.GREATER


@dataclass(frozen=True)
class ComplexRanked:
    """A complex number compared through its rank only.

    ``==`` is value equality; use :meth:`equivalent` for the preorder's
    equivalence, under which ``1+2j`` and ``2+1j`` coincide.
    """

    value: complex

    @property
    def rank(self) -> float:
        return rank(self.value)

    def equivalent(self, other: "ComplexRanked") -> bool:
        return self.rank == other.rank

    def __lt__(self, other):
        return self.rank < other.rank

    def __le__(self, other):
        return self.rank <= other.rank

    def __gt__(self, other):
        return self.rank > other.rank

    def __ge__(self, other):
        return self.rank >= other.rank


def inf_complex(values: Iterable) -> tuple:
    vals = [complex(v) for v in values]
    if not vals:
        raise EmptySet("infimum of an empty set")
    best = min(vals, key=canonical_key)
    return best, rank(best)


def sup_complex(values: Iterable) -> tuple:
    vals = [complex(v) for v in values]
    if not vals:
        raise EmptySet("supremum of an empty set")
    best = min(vals, key=lambda z: (-rank(z), z.real, z.imag))
    return best, rank(best)


def merged_grid(*families):
    eps = sorted({c for f in families for c in f.real_cuts})
    eta = sorted({c for f in families for c in f.imag_cuts})
    return eps, eta


def _probe_points(cuts, gap):
    """One point per step, just past each cluster of nearly equal cuts."""
    pts, group = [], []
    for c in sorted(cuts):
        if group and c - group[-1] > gap:
            pts.append(group[-1] + gap / 2)
            group = []
        group.append(c)
    if group:
        pts.append(group[-1] + gap / 2)
    return pts


def spectral_order_leq(a, b, tol: float = 1e-9) -> bool:
    """``a <=_s b``: every family value of ``b`` lies below the one of ``a``.

    Cuts of the two families that agree up to the clustering gap are merged,
    so rounding in either decomposition does not create spurious steps.
    """
    sa, sb = as_spectral(a), as_spectral(b)
    if sa.dim != sb.dim:
        raise DimensionMismatch(f"dimensions {sa.dim} and {sb.dim}")
    fa, fb = spectral_family(sa), spectral_family(sb)
    eps, eta = merged_grid(fa, fb)
    gap = cluster_gap(max(np.max(np.abs(sa.eigenvalues)), np.max(np.abs(sb.eigenvalues))))
    return all(
        proj_leq(fb(e, h), fa(e, h), tol) for e in _probe_points(eps, gap) for h in _probe_points(eta, gap)
    )


@dataclass(frozen=True)
class Rect:
    """Closed axis-parallel rectangle spanned by two corners ``lo`` and ``hi``.

    The corners only need ``rank(lo) <= rank(hi)``; the point set is the
    bounding box of the two corners.
    """

    lo: complex
    hi: complex

    def __post_init__(self):
        object.__setattr__(self, "lo", complex(self.lo))
        object.__setattr__(self, "hi", complex(self.hi))
        if rank(self.lo) > rank(self.hi):
            raise ValueError(f"corner {self.lo} ranks above {self.hi}")

    @classmethod
    def box(cls, re_min, re_max, im_min, im_max) -> "Rect":
        return cls(complex(re_min, im_min), complex(re_max, im_max))

    @classmethod
    def point(cls, z) -> "Rect":
        return cls(z, z)

    @property
    def re_min(self):
        return min(self.lo.real, self.hi.real)

    @property
    def re_max(self):
        return max(self.lo.real, self.hi.real)

    @property
    def im_min(self):
        return min(self.lo.imag, self.hi.imag)

    @property
    def im_max(self):
        return max(self.lo.imag, self.hi.imag)

    @property
    def bounds(self):
        return (self.re_min, self.re_max, self.im_min, self.im_max)

    def contains(self, z) -> bool:
        z = complex(z)
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def subset_of(self, other: "Rect") -> bool:
        return (
            other.re_min <= self.re_min
            and self.re_max <= other.re_max
            and other.im_min <= self.im_min
            and self.im_max <= other.im_max
        )

    def same_points(self, other: "Rect") -> bool:
        return self.bounds == other.bounds

    def width(self) -> float:
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    def corners(self):
        return [complex(x, y) for x in (self.re_min, self.re_max) for y in (self.im_min, self.im_max)]


def rect_below(x: Rect, y: Rect) -> bool:
    """Information order: ``y`` is a sharper estimate contained in ``x``."""
    return y.subset_of(x)


def way_below(x: Rect, y: Rect) -> bool:
    return (
        x.re_min < y.re_min
        and y.re_max < x.re_max
        and x.im_min < y.im_min
        and y.im_max < x.im_max
    )


def is_directed(rects) -> bool:
    rects = list(rects)
    for a, b in itertools.combinations_with_replacement(rects, 2):
        if not any(rect_below(a, c) and rect_below(b, c) for c in rects):
            return False
    return True


def directed_sup(rects) -> Rect:
    rects = list(rects)
    if not rects:
        raise EmptySet("supremum of an empty family")
    if not is_directed(rects):
        raise NotDirected("family has two members without a common refinement in the family")
    return Rect.box(
        max(r.re_min for r in rects),
        min(r.re_max for r in rects),
        max(r.im_min for r in rects),
        min(r.im_max for r in rects),
    )


def interpolate(x: Rect, y: Rect) -> Rect:
    """Corner-averaged rectangle strictly between ``x`` and ``y`` when ``x << y``."""
    return Rect.box(
        (x.re_min + y.re_min) / 2,
        (x.re_max + y.re_max) / 2,
        (x.im_min + y.im_min) / 2,
        (x.im_max + y.im_max) / 2,
    )


def scott_basic_contains(basic, est: Rect) -> bool:
    """Membership of ``est`` in the basic Scott open given by corners ``(lower, upper)``."""
    lower, upper = (complex(c) for c in basic)
    if not (lower.real < upper.real and lower.imag < upper.imag):
        raise ValueError("basic open needs lower < upper in both components")
    return (
        lower.real < est.re_min
        and est.re_max < upper.real
        and lower.imag < est.im_min
        and est.im_max < upper.imag
    )


def spectrum_rect(sd: SpectralData) -> Rect:
    """Smallest rectangle containing the spectrum."""
    vals = np.array(sd.eigenvalues)
    return Rect.box(vals.real.min(), vals.real.max(), vals.imag.min(), vals.imag.max())
