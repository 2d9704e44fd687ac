"""Command-line front end.

Fixtures are JSON files::

    {
      "dimension": 2,
      "operators": {"O": [[[1, 0], [0, 0]], [[0, 0], [0, -1]]]},
      "contexts": {"V": ["O"]},
      "abstract_lattice": {
        "atoms": ["a", "b"],
        "elements": {"X": ["a"]},
        "families": {"O": {"re": [[0, "X"], [1, "1"]], "im": [[0, "1"]]}},
        "contexts": {"W": ["X", "b"]}
      }
    }

Matrix entries are ``[re, im]`` pairs or plain numbers.  Reports go to
standard output as aligned text, or as JSON with ``--json``.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import corder, golden
from .contexts import GelfandPoint, context_from_operators, generate_poset
from .corder import Rect, rank
from .dasein import SubLattice, das_spectral_family, daseinise, family_geq
from .errors import ParseError, ToposError, TrivialContext
from .filters import (
    FiniteLattice,
    LatticeSpectralFamily,
    antonymous_function,
    cone,
    enumerate_filters,
    enumerate_quasipoints,
    observable_function,
    observable_parts,
)
from .kgroup import commutation_residual, conjugation_invariance, stone_forward, stone_inverse
from .linops import (
    SpectralData,
    as_matrix,
    fro,
    normal_spectral_decomposition,
    reconstruct_operator,
    unitary_flow,
)


def fmt_num(z, digits=9) -> str:
    z = complex(z)
    re = round(z.real, digits) + 0.0
    im = round(z.imag, digits) + 0.0
    if im == 0:
        return f"{re:g}"
    if re == 0:
        return f"{im:g}i"
    return f"{re:g}{im:+g}i"


def fmt_matrix(m) -> str:
    m = np.asarray(m)
    return "[" + "; ".join(" ".join(fmt_num(x, 6) for x in row) for row in m) + "]"


def fmt_range(cuts, i, sym) -> str:
    lo = None if i == 0 else cuts[i - 1]
    hi = cuts[i] if i < len(cuts) else None
    if lo is None and hi is None:
        return f"any {sym}"
    if lo is None:
        return f"{sym} < {hi:g}"
    if hi is None:
        return f"{lo:g} <= {sym}"
    return f"{lo:g} <= {sym} < {hi:g}"


def cell_points(cuts):
    """One representative point per step of a family, including the one below all cuts."""
    pts = [cuts[0] - 1.0] + list(cuts)
    return pts


@dataclass
class Report:
    command: str
    digest: str
    tolerances: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)  # (title, headers, rows)
    verdicts: list = field(default_factory=list)  # (name, passed, detail)
    errors: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors and all(p for _, p, _ in self.verdicts)

    def table(self, title, headers, rows):
        self.tables.append((title, list(headers), [[str(c) for c in r] for r in rows]))

    def verdict(self, name, passed, detail=""):
        self.verdicts.append((name, bool(passed), str(detail)))

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "inputs_digest": self.digest,
            "tolerances": self.tolerances,
            "tables": [{"title": t, "headers": h, "rows": r} for t, h, r in self.tables],
            "verdicts": [{"name": n, "pass": p, "detail": d} for n, p, d in self.verdicts],
            "errors": self.errors,
            "notes": self.notes,
            "ok": self.ok,
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)

    def to_text(self) -> str:
        out = [f"# {self.command}", f"inputs digest: {self.digest}"]
        if self.tolerances:
            out.append("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in sorted(self.tolerances.items())))
        for title, headers, rows in self.tables:
            out.append("")
            out.append(f"## {title}")
            widths = [len(h) for h in headers]
            for r in rows:
                widths = [max(w, len(c)) for w, c in zip(widths, r)]
            out.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip())
            out.append("  ".join("-" * w for w in widths))
            for r in rows:
                out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        out.append("")
        out.append("## verdicts")
        for name, passed, detail in self.verdicts:
            out.append(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
        for n in self.notes:
            out.append(f"note: {n}")
        for e in self.errors:
            out.append(f"error: {e}")
        out.append(f"result: {'ok' if self.ok else 'failed'}")
        return "\n".join(out) + "\n"


# --- fixture parsing -------------------------------------------------------


def _entry(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ParseError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def parse_matrix(rows, where, dim=None) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ParseError(f"{where}: expected a list of rows")
    n = len(rows)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{where}[{i}]: row must have {n} entries")
        for j, x in enumerate(row):
            out[i, j] = _entry(x, f"{where}[{i}][{j}]")
    if dim is not None and n != dim:
        raise ParseError(f"{where}: matrix is {n}x{n}, fixture dimension is {dim}")
    return out


@dataclass
class Fixture:
    raw: bytes
    dimension: int | None
    operators: dict
    contexts: dict
    lattice: FiniteLattice | None = None
    elements: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    abstract_contexts: dict = field(default_factory=dict)

    def operator(self, name):
        if name is None:
            if not self.operators:
                raise ParseError("operators: fixture defines no operators")
            name = next(iter(self.operators))
        if name not in self.operators:
            raise ParseError(f"operators.{name}: no such operator")
        return name, self.operators[name]


def _element(expr, lat: FiniteLattice, names: dict, where) -> int:
    if isinstance(expr, list):
        return lat.mask_of(expr)
    if not isinstance(expr, str):
        raise ParseError(f"{where}: expected an element name or a list of atoms")
    out = 0
    for term in expr.split("+"):
        term = term.strip()
        if term == "0":
            continue
        if term == "1":
            out |= lat.top
        elif term in names:
            out |= names[term]
        elif term in lat.atoms:
            out |= 1 << lat.atoms.index(term)
        else:
            raise ParseError(f"{where}: unknown element {term!r}")
    return out


def parse_fixture(raw: bytes) -> Fixture:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    dim = doc.get("dimension")
    if dim is not None and (not isinstance(dim, int) or dim < 1):
        raise ParseError("dimension: expected a positive integer")
    ops = {}
    for name, rows in (doc.get("operators") or {}).items():
        ops[name] = parse_matrix(rows, f"operators.{name}", dim)
    ctxs = {}
    for name, members in (doc.get("contexts") or {}).items():
        if not isinstance(members, list) or not all(m in ops for m in members):
            raise ParseError(f"contexts.{name}: expected a list of operator names")
        ctxs[name] = list(members)
    fx = Fixture(raw, dim, ops, ctxs)
    al = doc.get("abstract_lattice")
    if al is not None:
        atoms = al.get("atoms")
        if not isinstance(atoms, list) or not atoms or not all(isinstance(a, str) for a in atoms):
            raise ParseError("abstract_lattice.atoms: expected a list of labels")
        lat = FiniteLattice(tuple(atoms))
        names = {}
        for k, v in (al.get("elements") or {}).items():
            if not isinstance(v, list):
                raise ParseError(f"abstract_lattice.elements.{k}: expected a list of atoms")
            try:
                names[k] = lat.mask_of(v)
            except ToposError as exc:
                raise ParseError(f"abstract_lattice.elements.{k}: {exc}") from None
        fams = {}
        for k, v in (al.get("families") or {}).items():
            try:
                steps = {
                    part: tuple(
                        (float(c), _element(e, lat, names, f"abstract_lattice.families.{k}.{part}"))
                        for c, e in v[part]
                    )
                    for part in ("re", "im")
                }
                fams[k] = LatticeSpectralFamily(lat, steps["re"], steps["im"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"abstract_lattice.families.{k}: {exc}") from None
        actx = {}
        for k, v in (al.get("contexts") or {}).items():
            blocks = tuple(_element(e, lat, names, f"abstract_lattice.contexts.{k}") for e in v)
            try:
                actx[k] = SubLattice(lat, blocks, k)
            except ToposError as exc:
                raise ParseError(f"abstract_lattice.contexts.{k}: {exc}") from None
        fx.lattice, fx.elements, fx.families, fx.abstract_contexts = lat, names, fams, actx
    return fx


# --- commands --------------------------------------------------------------


def _seed_context(fx: Fixture, name, op_name, op, tol):
    if name is not None:
        if name not in fx.contexts:
            raise ParseError(f"contexts.{name}: no such context")
        return context_from_operators([fx.operators[m] for m in fx.contexts[name]], tol, name)
    return context_from_operators([op], tol, op_name)


def cmd_decompose(fx: Fixture, args, rep: Report):
    name, op = fx.operator(args.operator)
    tol = args.tol or 1e-9 * max(1.0, fro(op))
    rep.tolerances["reconstruction"] = tol
    sd, fam = normal_spectral_decomposition(op)
    rep.table(
        f"eigenpairs of {name}",
        ["eigenvalue", "rank", "projector"],
        [[fmt_num(v), p.rank, fmt_matrix(p.matrix)] for v, p in sd.pairs],
    )
    rows = []
    eps_pts, eta_pts = cell_points(fam.real_cuts), cell_points(fam.imag_cuts)
    for j, e in enumerate(eps_pts):
        for k, h in enumerate(eta_pts):
            rows.append([fmt_range(fam.real_cuts, j, "eps"), fmt_range(fam.imag_cuts, k, "eta"), fmt_matrix(fam(e, h))])
    rep.table("two-parameter spectral family", ["real cut", "imaginary cut", "P(eps, eta)"], rows)
    resid = fro(reconstruct_operator(fam) - op)
    rep.verdict("reconstruction", resid <= tol, f"residual {resid:.1e}")
    bound = fro(op)
    n = op.shape[0]
    low = fro(fam(-bound - 1.0, 0.0)) + fro(fam(0.0, -bound - 1.0))
    high = fro(fam(bound, bound) - np.eye(n))
    rep.verdict("family vanishes below -||A|| and is 1 from ||A|| on", low + high <= tol, f"residual {low + high:.1e}")
    prod = 0.0
    for (e1, h1), (e2, h2) in itertools.product(itertools.product(eps_pts, eta_pts), repeat=2):
        prod = max(prod, fro(fam(e1, h1) @ fam(e2, h2) - fam(min(e1, e2), min(h1, h2))))
    rep.verdict("P(a)P(b) = P(min(a, b))", prod <= tol, f"residual {prod:.1e}")


def _abstract_daseinise(fx: Fixture, args, rep: Report):
    name = args.operator or next(iter(fx.families), None)
    if name not in fx.families:
        raise ParseError(f"abstract_lattice.families.{name}: no such family")
    ctx_name = args.abstract
    if ctx_name not in fx.abstract_contexts:
        raise ParseError(f"abstract_lattice.contexts.{ctx_name}: no such context")
    fam, ctx, lat = fx.families[name], fx.abstract_contexts[ctx_name], fx.lattice
    grid = das_spectral_family(fam, ctx, "outer")
    inner_grid = das_spectral_family(fam, ctx, "inner")
    rows = []
    for j, e in enumerate(cell_points(grid.eps)):
        for k, h in enumerate(cell_points(grid.eta)):
            rows.append([
                fmt_range(grid.eps, j, "eps"), fmt_range(grid.eta, k, "eta"),
                lat.label(fam(e, h)), lat.label(grid(e, h)), lat.label(inner_grid(e, h)),
            ])
    rep.table(
        f"family of {name} approximated in {ctx_name}",
        ["real cut", "imaginary cut", "original", "smallest above", "largest below"],
        rows,
    )
    d = daseinise(fam, ctx)
    orig = fam.atom_values()
    rep.table(
        "eigenvalue per atom",
        ["atom", "original", "lower approximation", "upper approximation"],
        [[a, fmt_num(o), fmt_num(i), fmt_num(u)] for a, o, i, u in zip(lat.atoms, orig, d.inner.atom_values(), d.outer.atom_values())],
    )
    rep.verdict(f"lower approximation of {name} <=_s {name}", family_geq(grid, fam), "family from above dominates")
    below = all(FiniteLattice.leq(inner_grid(e, h), fam(e, h)) for e in inner_grid.eps for h in inner_grid.eta)
    rep.verdict(f"{name} <=_s upper approximation", below, "family from below is dominated")
    rep.verdict(
        "lower <=_s upper",
        all(a.real <= b.real and a.imag <= b.imag for a, b in zip(d.inner.atom_values(), d.outer.atom_values())),
        "componentwise per atom",
    )
    rep.verdict("family path agrees with cone path", not d.diagnostics, "; ".join(d.diagnostics) or "no diagnostics")


def cmd_daseinise(fx: Fixture, args, rep: Report):
    if args.abstract is not None:
        return _abstract_daseinise(fx, args, rep)
    if args.context is None and fx.lattice is not None and fx.abstract_contexts and (args.operator in fx.families or args.operator is None and fx.families):
        args.abstract = next(iter(fx.abstract_contexts))
        return _abstract_daseinise(fx, args, rep)
    name, op = fx.operator(args.operator)
    sd = normal_spectral_decomposition(op)[0]
    seed = _seed_context(fx, args.context, name, op, args.tol)
    poset = generate_poset(seed)
    results = [daseinise(sd, c) for c in poset.contexts]
    rows = []
    for c, d in zip(poset.contexts, results):
        pts = [GelfandPoint(seed, i).restrict(c) for i in range(seed.size)]
        rows.append([
            c.label,
            " ".join(fmt_num(p.evaluate(d.inner)) for p in pts),
            " ".join(fmt_num(p.evaluate(d.outer)) for p in pts),
            "yes" if d.diagnostics else "no",
        ])
    rep.table(
        f"approximations of {name} (values listed per atom of {seed.label})",
        ["context", "lower approximation", "upper approximation", "staircase family"],
        rows,
    )
    tol = args.tol or 1e-9
    ok_inner = all(corder.spectral_order_leq(d.inner, d.outer, tol) for d in results)
    ok_sandwich = all(
        corder.spectral_order_leq(d.inner, sd, tol) and corder.spectral_order_leq(sd, d.outer, tol) for d in results
    )
    rep.verdict("lower <=_s upper in every context", ok_inner)
    rep.verdict("lower <=_s operator <=_s upper in every context", ok_sandwich)
    anti = mono = True
    for i, j in poset.strict_pairs():
        anti &= corder.spectral_order_leq(results[j].outer, results[i].outer, tol)
        mono &= corder.spectral_order_leq(results[i].inner, results[j].inner, tol)
    rep.verdict("upper approximation antitone in the context", anti, f"{len(list(poset.strict_pairs()))} inclusions")
    rep.verdict("lower approximation monotone in the context", mono)
    at = poset.index(args.at) if args.at else len(poset) - 1
    ctx = poset.contexts[at]
    grid_o = das_spectral_family(sd, ctx, "outer")
    grid_i = das_spectral_family(sd, ctx, "inner")
    frows = []
    for j, e in enumerate(cell_points(grid_o.eps)):
        for k, h in enumerate(cell_points(grid_o.eta)):
            frows.append([fmt_range(grid_o.eps, j, "eps"), fmt_range(grid_o.eta, k, "eta"), fmt_matrix(grid_o(e, h)), fmt_matrix(grid_i(e, h))])
    rep.table(f"approximated family in {ctx.label}", ["real cut", "imaginary cut", "smallest above", "largest below"], frows)


def _context_lattice(fx, args, name, op):
    try:
        seed = _seed_context(fx, args.context, name, op, args.tol)
    except TrivialContext:
        return None, None
    return seed, generate_poset(seed)


def cmd_observable_table(fx: Fixture, args, rep: Report):
    name, op = fx.operator(args.operator)
    sd = normal_spectral_decomposition(op)[0]
    seed, poset = _context_lattice(fx, args, name, op)
    lat = FiniteLattice.from_spectral(sd) if seed is None else FiniteLattice.from_context(seed)
    rows, f_vals, g_vals, exact = [], [], [], True
    for q in enumerate_quasipoints(lat):
        f, g = observable_function(sd, q), antonymous_function(sd, q)
        fc, fb = observable_parts(sd, q)
        exact &= f == complex(fc, fb)
        f_vals.append(f)
        g_vals.append(g)
        rows.append([lat.atoms[q.atom_index], fmt_num(f), fmt_num(g), fmt_num(fc), fmt_num(fb)])
    rep.table(f"observable values of {name}", ["quasipoint", "f", "g", "f real part", "f imaginary part"], rows)
    tol = args.tol or 1e-9
    spectrum = list(sd.eigenvalues)

    def same_set(vals):
        return all(any(abs(v - s) <= tol for v in vals) for s in spectrum) and all(any(abs(v - s) <= tol for s in spectrum) for v in vals)

    ranks = [rank(s) for s in spectrum]
    if len(set(ranks)) == len(ranks):
        rep.verdict("image of f equals the spectrum", same_set(f_vals))
        rep.verdict("image of g equals the spectrum", same_set(g_vals))
    else:
        rep.notes.append("spectrum has values of equal rank; images compared by rank")

        def same_ranks(vals):
            got = sorted({round(rank(v), 9) for v in vals})
            return got == sorted({round(r, 9) for r in ranks})

        rep.verdict("ranks of f values equal the ranks of the spectrum", same_ranks(f_vals))
        rep.verdict("ranks of g values equal the ranks of the spectrum", same_ranks(g_vals))
    rep.verdict("f = f_re + i f_im on every quasipoint", exact)
    if poset is None:
        return
    big = lat
    crows, all_ok = [], True
    for ci, sub in enumerate(poset.contexts):
        small = FiniteLattice.from_context(sub)
        outer = daseinise(sd, sub).outer
        for filt in enumerate_filters(small):
            lhs = observable_function(SpectralData.from_pairs(_pairs_in(sub, outer)), filt)
            rhs = observable_function(sd, cone(filt, big, poset.blocks[ci]))
            ok = abs(lhs - rhs) <= tol
            all_ok &= ok
            crows.append([sub.label, small.label(filt.generator), fmt_num(lhs), fmt_num(rhs), "ok" if ok else "MISMATCH"])
    rep.table("cones of filters of every subcontext", ["context", "filter generated by", "f of approximation", "f on cone", "check"], crows)
    rep.verdict("cone identity for every subcontext and filter", all_ok, f"{len(crows)} filters")


def _pairs_in(ctx, m):
    """Spectral pairs of an operator of the context, grouped by value, using the context atoms exactly."""
    vals = ctx.coordinates(m)
    merged: dict = {}
    for v, a in zip(vals, ctx.atoms):
        key = complex(round(v.real, 12), round(v.imag, 12))
        merged[key] = merged.get(key, 0) + a.matrix
    return list(merged.items())


def cmd_stone(fx: Fixture, args, rep: Report):
    name, op = fx.operator(args.operator)
    sd = normal_spectral_decomposition(op)[0]
    t0, steps = args.t0, args.steps
    ts = [k * t0 for k in range(steps + 1)]
    rep.tolerances.update({"group law": 1e-10, "commutation": 1e-10, "recovery": 1e-8})
    us = stone_forward(sd, ts)
    rows = []
    for t, u in zip(ts, us):
        rows.append([f"{t:g}", f"{fro(u @ u.conj().T - np.eye(u.shape[0])):.1e}", f"{commutation_residual(sd, u):.1e}"])
    rep.table(f"flow generated by {name}", ["t", "unitarity residual", "commutation residual"], rows)
    group = 0.0
    by_t = dict(zip(ts, us))
    for s, t in itertools.product(ts, repeat=2):
        if s + t in by_t:
            group = max(group, fro(by_t[s] @ by_t[t] - by_t[s + t]))
    rep.verdict("U(s)U(t) = U(s+t)", group <= 1e-10, f"max residual {group:.1e}")
    comm = max(commutation_residual(sd, u) for u in us)
    rep.verdict("flow commutes with the spectral projections", comm <= 1e-10, f"max residual {comm:.1e}")
    rec = stone_inverse(list(zip(ts, us)))
    err = fro(rec.operator() - sd.operator())
    rep.verdict("generator recovered from samples", err <= 1e-8, f"error {err:.1e}")
    back = max(fro(unitary_flow(rec, t) - u) for t, u in zip(ts, us))
    rep.verdict("recovered generator reproduces the samples", back <= 1e-8, f"error {back:.1e}")
    try:
        seed = context_from_operators([op], args.tol, name)
    except TrivialContext:
        return
    poset = generate_poset(seed)
    inv = max(conjugation_invariance(sd, u, poset) for u in us)
    rep.verdict("upper approximation invariant under the flow", inv <= 1e-10, f"max change {inv:.1e}")


def cmd_domain_demo(fx, args, rep: Report):
    rng = np.random.default_rng(args.seed)
    pairs = [(1 + 2j, 2 + 1j), (0, 1), (-1j, 1)]
    rep.table("rank comparison", ["a", "b", "verdict"], [[fmt_num(a), fmt_num(b), corder.cmp_complex(a, b).value] for a, b in pairs])
    sets = [[1, -1j], [1 + 2j, 2 + 1j], [3, 1 + 1j, 2 - 1j]]
    rep.table("infimum", ["set", "inf", "rank"], [[" ".join(fmt_num(z) for z in s), fmt_num(corder.inf_complex(s)[0]), fmt_num(corder.inf_complex(s)[1])] for s in sets])
    chain = [Rect(-(1 + 1j) / k, (1 + 1j) / k) for k in range(1, 7)]
    sup = corder.directed_sup(chain)
    rep.table("nested chain", ["k", "lo", "hi"], [[k + 1, fmt_num(r.lo), fmt_num(r.hi)] for k, r in enumerate(chain)] + [["sup", fmt_num(sup.lo), fmt_num(sup.hi)]])
    rep.verdict("supremum of a nested chain is its smallest member", sup.same_points(chain[-1]))
    bad = 0
    for _ in range(50):
        base = [sorted(rng.uniform(-5, 5, 2)) for _ in range(2)]
        fam = []
        for _ in range(4):
            shrink = rng.uniform(0, 0.2, 4)
            base = [[base[0][0] + shrink[0], base[0][1] - shrink[1]], [base[1][0] + shrink[2], base[1][1] - shrink[3]]]
            if base[0][0] > base[0][1] or base[1][0] > base[1][1]:
                break
            fam.append(Rect.box(base[0][0], base[0][1], base[1][0], base[1][1]))
        if not fam:
            continue
        got = corder.directed_sup(fam)
        pts = [r.bounds for r in fam]
        want = (max(p[0] for p in pts), min(p[1] for p in pts), max(p[2] for p in pts), min(p[3] for p in pts))
        bad += got.bounds != want
    rep.verdict("supremum of random chains equals their intersection", bad == 0, "50 chains")
    x, y = Rect(-1 - 1j, 3 + 3j), Rect(0, 1 + 1j)
    m = corder.interpolate(x, y)
    rep.table("way-below", ["x", "y", "x << y"], [
        [f"[{fmt_num(a.lo)}, {fmt_num(a.hi)}]", f"[{fmt_num(b.lo)}, {fmt_num(b.hi)}]", corder.way_below(a, b)]
        for a, b in [(x, y), (x, x), (Rect(0, 2 + 2j), y)]
    ])
    rep.verdict("interpolant sits strictly between", corder.way_below(x, m) and corder.way_below(m, y), f"[{fmt_num(m.lo)}, {fmt_num(m.hi)}]")
    rep.verdict("Scott basic open contains [1+i, 2+2i]", corder.scott_basic_contains((0, 3 + 3j), Rect(1 + 1j, 2 + 2j)))


def cmd_worked_example(fx, args, rep: Report):
    op = None
    if fx is not None and fx.operators:
        op = fx.operator(args.operator)[1]
    out = golden.run_worked_example(op)
    for title, (headers, rows) in out.tables.items():
        rep.table(title, headers, rows)
    for n, p, d in out.verdicts:
        rep.verdict(n, p, d)
    if out.diffs:
        rep.errors.append("GoldenMismatch: " + " | ".join(out.diffs))


COMMANDS = {
    "decompose": cmd_decompose,
    "daseinise": cmd_daseinise,
    "observable-table": cmd_observable_table,
    "stone": cmd_stone,
    "domain-demo": cmd_domain_demo,
    "paper-example": cmd_worked_example,
}


def _add_globals(p, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--tol", type=float, help="override the numerical tolerance", **({"default": None} if not suppress else kw))
    p.add_argument("--json", action="store_true", help="emit a JSON report", **kw)
    p.add_argument("--seed", type=int, help="random seed for generated samples", **({"default": 0} if not suppress else kw))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toposcx", description="Spectral families and observable functions of small normal matrices.")
    _add_globals(p, False)
    sub = p.add_subparsers(dest="command", required=True)
    needs_fixture = {"decompose", "daseinise", "observable-table", "stone"}
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _add_globals(sp, True)
        sp.add_argument("fixture", nargs=None if name in needs_fixture else "?", help="fixture JSON file")
        if name != "domain-demo":
            sp.add_argument("--operator", help="operator name in the fixture")
        if name in ("daseinise", "observable-table"):
            sp.add_argument("--context", help="context seed name from the fixture")
        if name == "daseinise":
            sp.add_argument("--abstract", help="abstract context name")
            sp.add_argument("--at", help="context label for the family table")
        if name == "stone":
            sp.add_argument("--t0", type=float, default=0.1)
            sp.add_argument("--steps", type=int, default=5)
    return p


def run(argv=None) -> tuple:
    args = build_parser().parse_args(argv)
    raw = b""
    fx = None
    if getattr(args, "fixture", None):
        try:
            with open(args.fixture, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read fixture: {exc.strerror}") from None
        fx = parse_fixture(raw)
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in ("fixture", "json")}
    digest = hashlib.sha256(raw + json.dumps(settings, sort_keys=True, default=str).encode()).hexdigest()[:16]
    rep = Report(args.command, digest)
    if args.tol is not None:
        rep.tolerances["tol"] = args.tol
    try:
        COMMANDS[args.command](fx, args, rep)
    except ToposError as exc:
        rep.errors.append(f"{type(exc).__name__}: {exc}")
    return rep, args


def main(argv=None) -> int:
    try:
        rep, args = run(argv)
    except ParseError as exc:
        print(f"ParseError: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(rep.to_json() + "\n" if args.json else rep.to_text())
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
