"""Reference tables for the two-level operator diag(1, -i) and the checks
that reproduce them.

Each table row is a branch: a half-open range for the real cut, one for the
imaginary cut, and the expected factors written in terms of named
projections.  A factor string is ``0``, ``1`` or a sum of names.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .corder import spectral_order_leq
from .dasein import SubLattice, das_spectral_family, family_geq, inner_das_normal, outer_das_projection
from .errors import GoldenMismatch
from .filters import FiniteLattice, LatticeSpectralFamily
from .linops import (
    SpectralData,
    dagger,
    hermitian_eigendecomposition,
    normal_spectral_decomposition,
    spectral_family,
    split_normal,
)

INF = None


class Branch(NamedTuple):
    eps: tuple  # (lo inclusive or None, hi exclusive or None)
    eta: tuple | None
    re: str
    im: str | None

    def describe(self) -> str:
        parts = [_describe(self.eps, "eps")]
        if self.eta is not None:
            parts.append(_describe(self.eta, "eta"))
        return ", ".join(parts)

    def expected(self) -> str:
        if self.im is None:
            return self.re
        return f"{_paren(self.re)} {_paren(self.im)}"


def _paren(expr: str) -> str:
    return f"({expr})" if "+" in expr else expr


def _describe(rng, sym) -> str:
    lo, hi = rng
    if lo is None and hi is None:
        return f"any {sym}"
    if lo is None:
        return f"{sym} < {hi:g}"
    if hi is None:
        return f"{lo:g} <= {sym}"
    return f"{lo:g} <= {sym} < {hi:g}"


_E = ((INF, 0.0), (0.0, 1.0), (1.0, INF))
_H = ((INF, -1.0), (-1.0, 0.0), (0.0, INF))

OZ_FAMILY = tuple(
    Branch(e, h, re, im)
    for e, re in zip(_E, ("0", "P2", "P1+P2"))
    for h, im in zip(_H, ("0", "Q2", "Q1+Q2"))
)

NORM_SQUARED_FAMILY = tuple(
    Branch(e, h, re, im)
    for e, re in zip(((INF, 1.0), (1.0, INF)), ("0", "P1+P2"))
    for h, im in zip(((INF, 0.0), (0.0, INF)), ("0", "Q"))
)

SUM_FAMILY = (
    Branch((INF, -1.0), None, "0", None),
    Branch((-1.0, 1.0), None, "R2", None),
    Branch((1.0, INF), None, "R1+R2", None),
)

ABS_NORM_SQUARED_FAMILY = (
    Branch((INF, 1.0), None, "0", None),
    Branch((1.0, INF), None, "R1+R2", None),
)

DASEIN_FAMILY = tuple(
    Branch(e, h, re, im)
    for e, re in zip(((INF, 0.0), (0.0, INF)), ("0", "P1+P2"))
    for h, im in zip(_H, ("0", "Q2", "Q1+Q2"))
)

OZ = np.diag([1.0, -1j])

_D1 = np.diag([1.0, 0.0]).astype(complex)
_D2 = np.diag([0.0, 1.0]).astype(complex)
MATRIX_NAMES = {
    "0": np.zeros((2, 2), dtype=complex),
    "1": np.eye(2, dtype=complex),
    "P1": _D1,
    "P2": _D2,
    "Q1": _D1,
    "Q2": _D2,
    "Q": _D1 + _D2,
    "R1": _D1,
    "R2": _D2,
}

# The worked example treats the real-part and imaginary-part projections as
# independent: four atoms, one for each pair of factor projections.
ABSTRACT_ATOMS = ("P1Q1", "P1Q2", "P2Q1", "P2Q2")
ABSTRACT_ELEMENTS = {
    "P1": ("P1Q1", "P1Q2"),
    "P2": ("P2Q1", "P2Q2"),
    "Q1": ("P1Q1", "P2Q1"),
    "Q2": ("P1Q2", "P2Q2"),
}
ABSTRACT_CONTEXT = ("Q1", "Q2")


def sample_points(rng) -> list:
    """The closed lower end plus interior points up to just below the upper end."""
    lo, hi = rng
    if lo is None and hi is None:
        return [0.0]
    if lo is None:
        return [hi - 1.0, hi - 1e-6]
    if hi is None:
        return [lo, lo + 1.0]
    return [lo, (lo + hi) / 2, hi - 1e-6]


def evaluate_names(expr: str, names: dict, join, zero):
    out = zero
    for term in expr.split("+"):
        out = join(out, names[term.strip()])
    return out


def _points(branch: Branch):
    for e in sample_points(branch.eps):
        if branch.eta is None:
            yield e, None
        else:
            for h in sample_points(branch.eta):
                yield e, h


def check_table(title, table, re_at, im_at, names, join, zero, meet, same, show) -> list:
    """Compare a computed family against a table; return branch-level diffs.

    ``re_at``/``im_at`` give the computed factor values; the joint value
    ``meet(re, im)`` is compared as well.
    """
    diffs = []
    for b in table:
        want_re = evaluate_names(b.re, names, join, zero)
        want_im = None if b.im is None else evaluate_names(b.im, names, join, zero)
        for e, h in _points(b):
            got_re = re_at(e)
            bad = not same(got_re, want_re)
            if b.im is not None:
                got_im = im_at(h)
                bad = bad or not same(got_im, want_im) or not same(meet(got_re, got_im), meet(want_re, want_im))
            if bad:
                where = f"eps={e:g}" + ("" if h is None else f", eta={h:g}")
                got = show(got_re) + ("" if b.im is None else " " + show(got_im))
                diffs.append(f"{title}: branch [{b.describe()}] expected {b.expected()}, got {got} at {where}")
                break
    return diffs


def _mat_same(a, b) -> bool:
    return np.array_equal(np.asarray(a), np.asarray(b))


_SHOWN = (("0", MATRIX_NAMES["0"]), ("1", MATRIX_NAMES["1"]), ("diag(1,0)", _D1), ("diag(0,1)", _D2))


def _mat_show(m) -> str:
    m = np.asarray(m)
    for label, v in _SHOWN:
        if np.array_equal(m, v):
            return label
    return np.array2string(np.round(m, 6) + 0.0, separator=",").replace("\n", "")


def _mat_table(title, table, re_at, im_at):
    return check_table(
        title, table, re_at, im_at, MATRIX_NAMES,
        join=lambda a, b: a + b, zero=MATRIX_NAMES["0"], meet=lambda a, b: a @ b,
        same=_mat_same, show=_mat_show,
    )


def abstract_lattice():
    lat = FiniteLattice(ABSTRACT_ATOMS)
    names = {k: lat.mask_of(v) for k, v in ABSTRACT_ELEMENTS.items()}
    names["0"] = 0
    names["1"] = lat.top
    return lat, names


def abstract_family(op, lat, names) -> LatticeSpectralFamily:
    """Lift the factor families of ``op`` into the four-atom lattice.

    Each eigenprojection of the real part is matched to ``P1``/``P2`` and each
    of the imaginary part to ``Q1``/``Q2`` by equality with the named matrices.
    """
    re, im = split_normal(op)

    def steps(h, keys):
        sd = hermitian_eigendecomposition(h)
        out, acc = [], 0
        for v, p in sorted(sd.pairs, key=lambda vp: vp[0].real):
            hit = [k for k in keys if np.allclose(p.matrix, MATRIX_NAMES[k], atol=1e-12)]
            if len(hit) != 1:
                raise GoldenMismatch([f"eigenprojection for {v.real:g} matches none of {keys}"])
            acc |= names[hit[0]]
            out.append((v.real, acc))
        return tuple(out)

    return LatticeSpectralFamily(lat, steps(re, ("P1", "P2")), steps(im, ("Q1", "Q2")))


class Outcome(NamedTuple):
    tables: dict
    verdicts: list  # (name, passed, detail)
    diffs: list


def _family_rows(table, re_at, im_at, show):
    rows = []
    for b in table:
        e = sample_points(b.eps)[0]
        h = None if b.eta is None else sample_points(b.eta)[0]
        got = show(re_at(e)) if b.im is None else f"{show(re_at(e))} {show(im_at(h))}"
        rows.append([b.describe(), b.expected(), got])
    return rows


def run_worked_example(op=None) -> Outcome:
    """Reproduce every table of the worked example for ``op`` (default diag(1, -i))."""
    op = OZ if op is None else np.asarray(op, dtype=complex)
    tables, verdicts, diffs = {}, [], []

    sd, fam = normal_spectral_decomposition(op)
    d = _mat_table("O family", OZ_FAMILY, fam.re_part, fam.im_part)
    diffs += d
    verdicts.append(("O family table", not d, f"{len(OZ_FAMILY)} branches"))
    tables["O family"] = (["branch", "expected", "computed"], _family_rows(OZ_FAMILY, fam.re_part, fam.im_part, _mat_show))

    norm_sq = dagger(op) @ op
    sd_n, fam_n = normal_spectral_decomposition(norm_sq)
    d = _mat_table("O^dagger O family", NORM_SQUARED_FAMILY, fam_n.re_part, fam_n.im_part)
    diffs += d
    verdicts.append(("O^dagger O family table", not d, f"{len(NORM_SQUARED_FAMILY)} branches"))
    tables["O^dagger O family"] = (
        ["branch", "expected", "computed"],
        _family_rows(NORM_SQUARED_FAMILY, fam_n.re_part, fam_n.im_part, _mat_show),
    )
    verdicts.append(("O <=_s O^dagger O", spectral_order_leq(sd, sd_n), "family comparison on merged grid"))

    re, im = split_normal(op)
    sum_sd = hermitian_eigendecomposition(re + im)
    sum_fam = spectral_family(sum_sd)
    d = _mat_table("A+B family", SUM_FAMILY, sum_fam.re_part, None)
    diffs += d
    verdicts.append(("A+B family table", not d, f"{len(SUM_FAMILY)} branches"))
    tables["A+B family"] = (["branch", "expected", "computed"], _family_rows(SUM_FAMILY, sum_fam.re_part, None, _mat_show))

    abs_sd = hermitian_eigendecomposition(norm_sq).map(lambda v: abs(v.real))
    abs_fam = spectral_family(abs_sd)
    d = _mat_table("|O^dagger O| family", ABS_NORM_SQUARED_FAMILY, abs_fam.re_part, None)
    diffs += d
    verdicts.append(("|O^dagger O| family table", not d, f"{len(ABS_NORM_SQUARED_FAMILY)} branches"))
    tables["|O^dagger O| family"] = (
        ["branch", "expected", "computed"],
        _family_rows(ABS_NORM_SQUARED_FAMILY, abs_fam.re_part, None, _mat_show),
    )
    verdicts.append(("A+B <=_s |O^dagger O|", spectral_order_leq(sum_sd, abs_sd), "family comparison on merged grid"))

    lat, names = abstract_lattice()
    afam = abstract_family(op, lat, names)
    ctx = SubLattice(lat, tuple(names[k] for k in ABSTRACT_CONTEXT), "V")
    grid = das_spectral_family(afam, ctx, "outer")
    d = check_table(
        "approximated family", DASEIN_FAMILY,
        lambda e: outer_das_projection(afam.re_part(e), ctx),
        lambda h: outer_das_projection(afam.im_part(h), ctx),
        names, join=lambda a, b: a | b, zero=0, meet=lambda a, b: a & b,
        same=lambda a, b: a == b, show=lat.label,
    )
    for b in DASEIN_FAMILY:
        for e, h in _points(b):
            want = evaluate_names(b.re, names, lambda a, c: a | c, 0) & evaluate_names(b.im, names, lambda a, c: a | c, 0)
            if grid(e, h) != want:
                d.append(f"approximated family: joint value at eps={e:g}, eta={h:g} is {lat.label(grid(e, h))}")
    diffs += d
    verdicts.append(("approximated family table", not d, f"{len(DASEIN_FAMILY)} branches"))
    tables["approximated family"] = (
        ["branch", "expected", "computed"],
        _family_rows(
            DASEIN_FAMILY,
            lambda e: outer_das_projection(afam.re_part(e), ctx),
            lambda h: outer_das_projection(afam.im_part(h), ctx),
            lat.label,
        ),
    )
    moved = {k: outer_das_projection(names[k], ctx) for k in ("P1", "P2", "Q1", "Q2")}
    nontrivial = {k: v for k, v in moved.items() if v != names[k]}
    expected_moves = {"P1": lat.top, "P2": lat.top}
    verdicts.append(("only P1 and P2 move, both to 1", nontrivial == expected_moves, ", ".join(f"{k} -> {lat.label(v)}" for k, v in sorted(moved.items()))))
    approx = inner_das_normal(afam, ctx)
    verdicts.append(("approximated operator <=_s O", family_geq(grid, afam), "approximated family dominates the original"))
    verdicts.append((
        "approximated family matches lower approximation",
        all(grid(e, h) == approx(e, h) for e in grid.eps for h in grid.eta),
        "atom values " + ", ".join(f"{lat.atoms[i]}={v}" for i, v in enumerate(approx.atom_values())),
    ))
    return Outcome(tables, verdicts, diffs)


def assert_worked_example(op=None) -> Outcome:
    out = run_worked_example(op)
    if out.diffs:
        raise GoldenMismatch(out.diffs)
    return out
