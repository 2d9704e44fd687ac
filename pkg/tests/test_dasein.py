import itertools
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fro, haar_unitary
from toposcx.contexts import Context, GelfandPoint, generate_poset
from toposcx.corder import rank, spectral_order_leq
from toposcx.dasein import (
    QuantityValue,
    SubLattice,
    add_quantity,
    das_spectral_family,
    daseinise,
    embed_real_pairs,
    inner_das_normal,
    inner_das_projection,
    outer_das_normal,
    outer_das_projection,
    quantity_arrow,
    split_complex_pair,
    zero_quantity,
)
from toposcx.errors import DownSetMismatch, InconsistentFamily, InvalidFamily, NotInImage, PointNotInContext
from toposcx.filters import FiniteLattice
from toposcx.linops import SpectralData

seeds = st.integers(0, 2**32 - 1)


def rotated_context(rng, n, label="R"):
    u = haar_unitary(rng, n)
    return Context(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(n)), label)


def diag_context(n, label="D"):
    return Context(tuple(np.diag(np.eye(n)[i]) for i in range(n)), label)


def operator_in(ctx, values):
    return sum(v * a.matrix for v, a in zip(values, ctx.atoms))


def subset_projectors(ctx):
    for mask in range(1 << ctx.size):
        yield mask, ctx.element(mask)


def brute_outer(p, ctx):
    """Smallest context element above ``p``: among all upper bounds, the one of least trace."""
    ups = [q for _, q in subset_projectors(ctx) if fro(q @ p - p) <= 1e-9]
    return min(ups, key=lambda q: np.trace(q).real)


def brute_inner(p, ctx):
    downs = [q for _, q in subset_projectors(ctx) if fro(p @ q - q) <= 1e-9]
    return max(downs, key=lambda q: np.trace(q).real)


def block_values(values, blocks, pick):
    """Per-seed-atom value of a coarsening: ``pick`` applied to each block."""
    out = [0j] * len(values)
    for b in blocks:
        idx = [i for i in range(len(values)) if b >> i & 1]
        v = pick([values[i] for i in idx])
        for i in idx:
            out[i] = v
    return out


def upper_pick(vs):
    return complex(max(v.real for v in vs), max(v.imag for v in vs))


def lower_pick(vs):
    return complex(min(v.real for v in vs), min(v.imag for v in vs))


class TestProjections:
    def test_abstract_example(self):
        lat = FiniteLattice(("P1Q1", "P1Q2", "P2Q1", "P2Q2"))
        ctx = SubLattice(lat, (0b0101, 0b1010), "V")
        assert outer_das_projection(0b0011, ctx) == lat.top
        assert outer_das_projection(0b1100, ctx) == lat.top
        assert outer_das_projection(0b0101, ctx) == 0b0101
        assert inner_das_projection(0b0011, ctx) == 0

    def test_members_fixed(self):
        ctx = rotated_context(np.random.default_rng(1), 3)
        for _, q in subset_projectors(ctx):
            assert fro(outer_das_projection(q, ctx).matrix - q) <= 1e-9
            assert fro(inner_das_projection(q, ctx).matrix - q) <= 1e-9

    def test_superposition(self):
        ctx = diag_context(2)
        p = 0.5 * np.array([[1, 1], [1, 1]])
        assert fro(outer_das_projection(p, ctx).matrix - np.eye(2)) == 0
        assert fro(inner_das_projection(p, ctx).matrix) == 0
        assert fro(inner_das_projection(np.eye(2), ctx).matrix - np.eye(2)) == 0

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 4))
    def test_matches_brute_force(self, seed, n):
        rng = np.random.default_rng(seed)
        fine = rotated_context(rng, n)
        coarse_blocks = [b for b in range(1, 1 << n)]
        ctx = Context((fine.element(0b1), fine.element((1 << n) - 2)))
        for mask in coarse_blocks:
            p = fine.element(mask)
            assert fro(outer_das_projection(p, ctx).matrix - brute_outer(p, ctx)) <= 1e-9
            assert fro(inner_das_projection(p, ctx).matrix - brute_inner(p, ctx)) <= 1e-9

    def test_meet_inequalities(self):
        lat = FiniteLattice(("a", "b", "c"))
        for blocks in [(0b011, 0b100), (0b101, 0b010), (0b001, 0b110), (0b001, 0b010, 0b100)]:
            ctx = SubLattice(lat, blocks)
            for p, q in itertools.product(lat.elements(), repeat=2):
                assert FiniteLattice.leq(inner_das_projection(p & q, ctx), inner_das_projection(p, ctx) & inner_das_projection(q, ctx))
                assert FiniteLattice.leq(outer_das_projection(p & q, ctx), outer_das_projection(p, ctx) & outer_das_projection(q, ctx))

    def test_outer_meet_can_be_strictly_smaller(self):
        lat = FiniteLattice(("a", "b", "c"))
        ctx = SubLattice(lat, (0b011, 0b100))
        p, q = 0b001, 0b010
        assert outer_das_projection(p & q, ctx) == 0
        assert outer_das_projection(p, ctx) & outer_das_projection(q, ctx) == 0b011


class TestFamilies:
    def test_maximal_context_keeps_family(self):
        vals = [1 + 1j, -1, 2j]
        ctx = diag_context(3)
        sd = SpectralData.diagonal(vals)
        for mode in ("inner", "outer"):
            grid = das_spectral_family(sd, ctx, mode)
            for e, h, v in grid.rows():
                from toposcx.linops import spectral_family

                assert fro(v - spectral_family(sd)(e, h)) <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_grid_values_are_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        fine = rotated_context(rng, 3)
        vals = [complex(*rng.integers(-2, 3, 2)) for _ in range(3)]
        a = operator_in(fine, vals)
        poset = generate_poset(fine)
        from toposcx.linops import normal_spectral_decomposition

        sd, fam = normal_spectral_decomposition(a)
        for ctx in poset.contexts[1:]:
            inner = das_spectral_family(sd, ctx, "inner")
            outer = das_spectral_family(sd, ctx, "outer")
            for e, h, v in inner.rows():
                assert fro(v - brute_inner(fam(e, h), ctx)) <= 1e-9
            for e, h, v in outer.rows():
                assert fro(v - brute_outer(fam(e, h), ctx)) <= 1e-9

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            das_spectral_family(SpectralData.diagonal([1, 2]), diag_context(2), "middle")


class TestOperators:
    def test_member_unchanged(self):
        ctx = rotated_context(np.random.default_rng(2), 3)
        a = operator_in(ctx, [1j, 2, -1 - 1j])
        assert fro(outer_das_normal(a, ctx) - a) <= 1e-9
        assert fro(inner_das_normal(a, ctx) - a) <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(3, 4))
    def test_coarsened_values_match_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        fine = rotated_context(rng, n)
        vals = [complex(*rng.integers(-3, 4, 2)) for _ in range(n)]
        a = operator_in(fine, vals)
        poset = generate_poset(fine)
        for blocks, ctx in zip(poset.blocks, poset.contexts):
            d = daseinise(a, ctx)
            up = block_values(vals, blocks, upper_pick)
            lo = block_values(vals, blocks, lower_pick)
            assert fro(d.outer - operator_in(fine, up)) <= 1e-9
            assert fro(d.inner - operator_in(fine, lo)) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(2, 4))
    def test_inner_below_outer(self, seed, n):
        rng = np.random.default_rng(seed)
        fine = rotated_context(rng, n)
        a = operator_in(fine, rng.normal(size=n) + 1j * rng.normal(size=n))
        for ctx in generate_poset(fine).contexts:
            d = daseinise(a, ctx)
            assert spectral_order_leq(d.inner, d.outer)
            assert spectral_order_leq(d.inner, a) and spectral_order_leq(a, d.outer)
            assert ctx.contains(d.inner) and ctx.contains(d.outer)

    @pytest.mark.parametrize("n", [3, 4])
    def test_variance_across_contexts(self, n):
        rng = np.random.default_rng(40 + n)
        for _ in range(5):
            fine = rotated_context(rng, n)
            a = operator_in(fine, rng.integers(-3, 4, n) + 1j * rng.integers(-3, 4, n))
            poset = generate_poset(fine)
            ds = [daseinise(a, c) for c in poset.contexts]
            for small, big in poset.strict_pairs():
                assert spectral_order_leq(ds[big].outer, ds[small].outer)
                assert spectral_order_leq(ds[small].inner, ds[big].inner)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_subadditive(self, seed):
        rng = np.random.default_rng(seed)
        fine = diag_context(3)
        av, bv = rng.integers(-3, 4, 3).astype(float), rng.integers(-3, 4, 3).astype(float)
        for ctx in generate_poset(fine).contexts:
            lhs = outer_das_normal(np.diag(av + bv), ctx)
            rhs = outer_das_normal(np.diag(av), ctx) + outer_das_normal(np.diag(bv), ctx)
            assert spectral_order_leq(lhs, rhs)

    def test_not_additive(self):
        ctx = Context((np.diag([1, 1, 0]), np.diag([0, 0, 1])))
        a, b = np.diag([1.0, 0, 0]), np.diag([0.0, 1, 0])
        lhs = outer_das_normal(a + b, ctx)
        rhs = outer_das_normal(a, ctx) + outer_das_normal(b, ctx)
        assert spectral_order_leq(lhs, rhs) and not spectral_order_leq(rhs, lhs)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_parts_bound_the_operator(self, seed):
        rng = np.random.default_rng(seed)
        vals = rng.integers(-3, 4, 3) + 1j * rng.integers(-3, 4, 3)
        a = np.diag(vals)
        c, b = np.diag(vals.real), np.diag(vals.imag)
        for ctx in generate_poset(diag_context(3)).contexts:
            assert spectral_order_leq(outer_das_normal(c, ctx) + 1j * outer_das_normal(b, ctx), outer_das_normal(a, ctx))
            assert spectral_order_leq(inner_das_normal(a, ctx), inner_das_normal(c, ctx) + 1j * inner_das_normal(b, ctx))

    def test_staircase_is_reported(self, caplog):
        ctx = Context((np.diag([1, 0, 0]), np.diag([0, 1, 1])), "W")
        a = np.diag([0, 1, 1j])
        with caplog.at_level(logging.WARNING, logger="toposcx.dasein"):
            d = daseinise(a, ctx)
        assert d.diagnostics
        assert any(n.startswith("family path") for n in d.diagnostics)
        assert fro(d.inner) <= 1e-12
        assert fro(d.outer - np.diag([0, 1 + 1j, 1 + 1j])) <= 1e-12
        with pytest.raises(InconsistentFamily):
            daseinise(a, ctx, strict=True)


def three_atom_fixture():
    seed = diag_context(3, "D")
    poset = generate_poset(seed)
    return seed, poset


class TestQuantity:
    def test_member_values(self):
        seed, poset = three_atom_fixture()
        a = np.diag([2, -1j, 1 + 1j])
        for i in range(3):
            q = quantity_arrow(a, poset, 0, GelfandPoint(seed, i))
            assert q.mu[seed.label] == q.nu[seed.label] == a[i, i]

    def test_point_must_live_in_context(self):
        seed, poset = three_atom_fixture()
        with pytest.raises(PointNotInContext):
            quantity_arrow(np.eye(3), poset, 0, GelfandPoint(poset.contexts[1], 0))

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_monotone_along_chains(self, seed_):
        rng = np.random.default_rng(seed_)
        seed, poset = three_atom_fixture()
        a = np.diag(rng.integers(-3, 4, 3) + 1j * rng.integers(-3, 4, 3))
        for i in range(3):
            q = quantity_arrow(a, poset, 0, GelfandPoint(seed, i))
            for chain in poset.chains(0):
                labels = [poset.contexts[j].label for j in chain]
                for big, small in zip(labels, labels[1:]):
                    assert rank(q.mu[small]) <= rank(q.mu[big]) + 1e-12
                    assert rank(q.nu[small]) >= rank(q.nu[big]) - 1e-12

    def test_abstract_style_upper_grows(self):
        seed, poset = three_atom_fixture()
        q = quantity_arrow(np.diag([1, -1j, 0]), poset, 0, GelfandPoint(seed, 1))
        for lab in q.down_set[1:]:
            assert rank(q.nu[lab]) >= rank(q.nu[q.top])

    def sample(self, mu, nu):
        seed, poset = three_atom_fixture()
        labels = tuple(c.label for c in poset.contexts)
        order = frozenset((poset.contexts[a].label, poset.contexts[b].label) for a, b in poset.order)
        return QuantityValue(labels, order, dict(zip(labels, mu)), dict(zip(labels, nu)))

    def test_invariants_enforced(self):
        with pytest.raises(InvalidFamily):
            self.sample([0, 1, 0, 0], [5, 5, 5, 5])  # mu grows towards a smaller context
        with pytest.raises(InvalidFamily):
            self.sample([1, 0, 0, 0], [0, 1, 1, 1])  # mu above nu at the top

    def test_no_conjugation(self):
        assert not any("conj" in name for name in dir(QuantityValue))
        x = self.sample([1j, 0, 0, 0], [2, 2, 2, 2])
        with pytest.raises(InvalidFamily):
            self.sample([np.conj(v) for v in x.mu.values()], list(x.nu.values()))

    def test_embedding(self):
        z = self.sample([0] * 4, [0] * 4)
        assert embed_real_pairs(z, z).close_to(z)
        a = self.sample([2] * 4, [2] * 4)
        b = self.sample([-1] * 4, [-1] * 4)
        assert embed_real_pairs(a, b).close_to(self.sample([2 - 1j] * 4, [2 - 1j] * 4))

    def test_embedding_natural_and_injective(self):
        rng = np.random.default_rng(8)
        seed, poset = three_atom_fixture()
        made = []
        for _ in range(10):
            pr = [quantity_arrow(np.diag(rng.integers(-3, 4, 3).astype(float)), poset, 0, GelfandPoint(seed, int(rng.integers(0, 3)))) for _ in range(2)]
            e = embed_real_pairs(*pr)
            for lab in e.down_set:
                lhs = e.restrict(lab)
                rhs = embed_real_pairs(pr[0].restrict(lab), pr[1].restrict(lab))
                assert lhs.close_to(rhs)
            back = split_complex_pair(e)
            assert back[0].close_to(pr[0]) and back[1].close_to(pr[1])
            made.append((pr, e))
        for (p1, e1), (p2, e2) in itertools.combinations(made, 2):
            same_in = p1[0].close_to(p2[0]) and p1[1].close_to(p2[1])
            assert same_in == e1.close_to(e2)

    def test_embedding_not_onto(self):
        # rank of mu rises towards the top, but its real part falls
        q = self.sample([-1 + 3j, 0, 0, 0], [4j, 4j, 4j, 4j])
        with pytest.raises(NotInImage):
            split_complex_pair(q)

    def test_embedding_needs_same_down_set(self):
        seed, poset = three_atom_fixture()
        a = self.sample([0] * 4, [0] * 4)
        b = a.restrict(poset.contexts[1].label)
        with pytest.raises(DownSetMismatch):
            embed_real_pairs(a, b)

    def test_sum_monoid(self):
        rng = np.random.default_rng(3)
        seed, poset = three_atom_fixture()
        qs = [quantity_arrow(np.diag(rng.integers(-3, 4, 3) + 1j * rng.integers(-3, 4, 3)), poset, 0, GelfandPoint(seed, i % 3)) for i in range(6)]
        for x, y, z in itertools.combinations(qs, 3):
            assert add_quantity(x, zero_quantity(x)).close_to(x)
            assert add_quantity(x, y).close_to(add_quantity(y, x))
            assert add_quantity(add_quantity(x, y), z).close_to(add_quantity(x, add_quantity(y, z)))
