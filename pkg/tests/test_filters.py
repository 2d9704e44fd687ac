import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import haar_unitary, normal_from, unit_vector
from toposcx.contexts import Context, context_from_operators, generate_poset
from toposcx.corder import rank
from toposcx.errors import FamilyLatticeMismatch, InvalidFamily, NotASublattice, NotNormalized, TooLarge
from toposcx.filters import (
    Filter,
    FiniteLattice,
    LatticeSpectralFamily,
    Quasipoint,
    antonymous_function,
    antonymous_parts,
    cone,
    enumerate_filters,
    enumerate_quasipoints,
    expectation_bounds,
    observable_function,
    observable_parts,
    quasipoint_at,
    restrict_filter,
    state_filter,
    stone_homeomorphism,
)
from toposcx.linops import SpectralData, split_normal

OZ = np.diag([1, -1j])
seeds = st.integers(0, 2**32 - 1)


def lattice(k):
    return FiniteLattice(tuple("abcdef"[:k]))


def brute_filters(lat):
    """All proper filters by testing every subset of elements."""
    elems = list(lat.elements())
    out = []
    for bits_ in range(1, 1 << len(elems)):
        s = {e for i, e in enumerate(elems) if bits_ >> i & 1}
        if 0 in s:
            continue
        up = all(y in s for x in s for y in elems if x & ~y == 0)
        meet = all(x & y in s for x in s for y in s)
        if up and meet:
            out.append(frozenset(s))
    return sorted(out, key=lambda f: (len(f), sorted(f)))


def rotated_context(rng, n):
    u = haar_unitary(rng, n)
    return Context(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(n)))


def operator_in(ctx, values):
    return sum(v * a.matrix for v, a in zip(values, ctx.atoms))


class TestEnumeration:
    @pytest.mark.parametrize("k,count", [(1, 1), (2, 3), (3, 7), (4, 15), (5, 31)])
    def test_counts(self, k, count):
        assert len(enumerate_filters(lattice(k))) == count

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_brute_force(self, k):
        lat = lattice(k)
        assert [f.members for f in enumerate_filters(lat)] == brute_filters(lat)

    def test_two_atom_filters(self):
        lat = lattice(2)
        got = {frozenset(f.members) for f in enumerate_filters(lat)}
        assert got == {frozenset({3}), frozenset({1, 3}), frozenset({2, 3})}

    def test_too_large(self):
        with pytest.raises(TooLarge):
            enumerate_filters(lattice(6))

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_quasipoints(self, k):
        lat = lattice(k)
        qs = enumerate_quasipoints(lat)
        assert len(qs) == k
        for q in qs:
            assert q.is_maximal()
            for x in lat.elements():
                assert (x in q.members) != (lat.complement(x) in q.members)
            assert q == quasipoint_at(lat, q.atom_index)

    def test_one_atom_quasipoint(self):
        lat = lattice(1)
        (q,) = enumerate_quasipoints(lat)
        assert q.members == frozenset({1})

    def test_invalid_filters(self):
        lat = lattice(2)
        with pytest.raises(InvalidFamily):
            Filter(lat, {1})  # not upward closed
        with pytest.raises(InvalidFamily):
            Filter(lat, {1, 2, 3})  # meet 0
        with pytest.raises(InvalidFamily):
            Quasipoint(lat, {3})


class TestCone:
    def setup_method(self):
        self.big = lattice(3)
        self.small = lattice(2)
        self.embed = (0b011, 0b100)

    def test_top_only(self):
        f = Filter(self.small, {3})
        assert cone(f, self.big, self.embed).members == frozenset({7})

    def test_principal_at_merged_atom(self):
        f = Filter.principal(self.small, 0b01)
        c = cone(f, self.big, self.embed)
        assert c.members == frozenset(y for y in self.big.elements() if 0b011 & ~y == 0)

    def test_smallest_containing(self):
        for f in enumerate_filters(self.small):
            c = cone(f, self.big, self.embed)
            image = {sum(self.embed[i] for i in range(2) if x >> i & 1) for x in f.members}
            containing = [g for g in enumerate_filters(self.big) if image <= g.members]
            assert c.members == frozenset.intersection(*[g.members for g in containing])
            assert f.members <= restrict_filter(c, self.small, self.embed).members

    def test_bad_embedding(self):
        with pytest.raises(NotASublattice):
            cone(Filter(self.small, {3}), self.big, (0b011, 0b110))


def filter_oracle(values, gen):
    """Observable and antonymous values of a diagonal family on the filter generated by ``gen``."""
    sel = [v for i, v in enumerate(values) if gen >> i & 1]
    f = complex(max(v.real for v in sel), max(v.imag for v in sel))
    g = complex(min(v.real for v in sel), min(v.imag for v in sel))
    return f, g


class TestObservable:
    def test_oz_quasipoints(self):
        ctx = context_from_operators([OZ])
        lat = FiniteLattice.from_context(ctx)
        sd = SpectralData.diagonal([1, -1j])
        vals = {ctx.coordinates(OZ)[q.atom_index]: (observable_function(sd, q), antonymous_function(sd, q)) for q in enumerate_quasipoints(lat)}
        assert vals == {1: (1, 1), -1j: (-1j, -1j)}

    def test_identity(self):
        lat = FiniteLattice.from_context(context_from_operators([OZ]))
        for f in enumerate_filters(lat):
            assert observable_function(np.eye(2), f) == 1
            assert antonymous_function(np.eye(2), f) == 1

    def test_abstract_family(self):
        lat = FiniteLattice(("P1Q1", "P1Q2", "P2Q1", "P2Q2"))
        fam = LatticeSpectralFamily(lat, ((0.0, 0b1100), (1.0, 0b1111)), ((-1.0, 0b1010), (0.0, 0b1111)))
        got = [observable_function(fam, q) for q in enumerate_quasipoints(lat)]
        assert got == [1, 1 - 1j, 0, -1j]
        assert fam.atom_values() == tuple(got)

    def test_family_lattice_mismatch(self):
        lat = FiniteLattice(("a", "b"))
        fam = LatticeSpectralFamily.from_atom_values(lat, [1, 2])
        with pytest.raises(FamilyLatticeMismatch):
            observable_function(fam, Filter(lattice(2), {3}))
        with pytest.raises(FamilyLatticeMismatch):
            observable_function(np.diag([1, 2, 3]), Filter.principal(FiniteLattice.from_context(context_from_operators([OZ])), 1))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 4))
    def test_matches_filter_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        ctx = rotated_context(rng, n)
        vals = [complex(*rng.integers(-3, 4, 2)) for _ in range(n)]
        a = operator_in(ctx, vals)
        lat = FiniteLattice.from_context(ctx)
        for filt in enumerate_filters(lat):
            f, g = filter_oracle(vals, filt.generator)
            assert observable_function(a, filt) == pytest.approx(f, abs=1e-9)
            assert antonymous_function(a, filt) == pytest.approx(g, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 5))
    def test_parts_are_hermitian_observables(self, seed, n):
        rng = np.random.default_rng(seed)
        ctx = rotated_context(rng, n)
        vals = [complex(*rng.integers(-3, 4, 2)) for _ in range(n)]
        a = operator_in(ctx, vals)
        c, b = split_normal(a)
        lat = FiniteLattice.from_context(ctx)
        for q in enumerate_quasipoints(lat):
            fc, fb = observable_function(c, q), observable_function(b, q)
            assert abs(fc.imag) == 0 and abs(fb.imag) == 0
            assert observable_parts(a, q) == pytest.approx((fc.real, fb.real), abs=1e-12)
            assert observable_function(a, q) == pytest.approx(fc + 1j * fb, abs=1e-12)
            gc, gb = antonymous_function(c, q), antonymous_function(b, q)
            assert antonymous_parts(a, q) == pytest.approx((gc.real, gb.real), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 5))
    def test_sum_of_commuting_self_adjoint(self, seed, n):
        rng = np.random.default_rng(seed)
        ctx = rotated_context(rng, n)
        cv = rng.integers(-3, 4, n).astype(float)
        dv = rng.integers(-3, 4, n).astype(float)
        lat = FiniteLattice.from_context(ctx)
        for q in enumerate_quasipoints(lat):
            lhs = observable_function(operator_in(ctx, cv + dv), q)
            rhs = observable_function(operator_in(ctx, cv), q) + observable_function(operator_in(ctx, dv), q)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_pairing_is_bijective(self):
        ctx = Context(tuple(np.diag(np.eye(3)[i]) for i in range(3)))
        lat = FiniteLattice.from_context(ctx)
        qs = enumerate_quasipoints(lat)
        grid = [complex(x, y) for x in (-1, 0, 2) for y in (-1, 1)]
        seen_f, seen_pair = {}, {}
        for vals in itertools.product(grid, repeat=3):
            a = np.diag(vals)
            c, b = split_normal(a)
            f_a = tuple(observable_function(a, q) for q in qs)
            pair = (tuple(observable_function(c, q).real for q in qs), tuple(observable_function(b, q).real for q in qs))
            # inverse map: real and imaginary parts
            assert pair == (tuple(v.real for v in f_a), tuple(v.imag for v in f_a))
            seen_f[f_a] = vals
            seen_pair[pair] = vals
        assert len(seen_f) == len(seen_pair) == len(grid) ** 3

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 5))
    def test_image_is_spectrum(self, seed, n):
        rng = np.random.default_rng(seed)
        vals = [complex(*rng.integers(-3, 4, 2)) for _ in range(n)]
        sd = SpectralData.diagonal(vals)
        lat = FiniteLattice.from_spectral(sd)
        fs = {observable_function(sd, q) for q in enumerate_quasipoints(lat)}
        gs = {antonymous_function(sd, q) for q in enumerate_quasipoints(lat)}
        assert fs == gs == set(sd.eigenvalues)


class TestStates:
    def test_atom_state(self):
        lat = FiniteLattice.from_context(Context((np.diag([1, 0]), np.diag([0, 1]))))
        sf = state_filter([1, 0], lat)
        assert sf.maximal
        assert sf.filter == quasipoint_at(lat, 0)

    def test_superposition(self):
        lat = FiniteLattice.from_context(context_from_operators([OZ]))
        sf = state_filter(np.array([1, 1]) / math.sqrt(2), lat)
        assert not sf.maximal
        assert sf.filter.members == frozenset({lat.top})

    def test_not_normalized(self):
        lat = FiniteLattice.from_context(context_from_operators([OZ]))
        with pytest.raises(NotNormalized):
            state_filter([1, 1], lat)

    def test_random_states_give_filters(self):
        rng = np.random.default_rng(20)
        ctx = rotated_context(rng, 4)
        lat = FiniteLattice.from_context(ctx)
        for _ in range(20):
            state = unit_vector(rng, 4)
            if rng.random() < 0.5:
                # put the state inside a random element so non-trivial filters appear
                mask = int(rng.integers(1, 16))
                state = lat.projector(mask) @ state
                state /= np.linalg.norm(state)
            sf = state_filter(state, lat)
            mem = sf.filter.members
            assert all(y in mem for x in mem for y in lat.elements() if x & ~y == 0)
            assert all(x & y in mem for x in mem for y in mem)
            assert sf.maximal == (bin(sf.filter.generator).count("1") == 1)

    def test_expectation_examples(self):
        assert expectation_bounds(OZ, [1, 0]) == (1, 1, 1)
        g, e, f = expectation_bounds(OZ, np.array([1, 1]) / math.sqrt(2))
        assert g == -1j and f == 1
        assert e == pytest.approx((1 - 1j) / 2, abs=1e-15)
        assert rank(g) <= rank(e) <= rank(f)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 4))
    def test_eigenstates_are_sharp(self, seed, n):
        rng = np.random.default_rng(seed)
        vals = [complex(*rng.integers(-3, 4, 2)) for _ in range(n)]
        u = haar_unitary(rng, n)
        a = u @ np.diag(vals) @ u.conj().T
        for i in range(n):
            g, e, f = expectation_bounds(a, u[:, i])
            assert abs(g - vals[i]) <= 1e-9 and abs(e - vals[i]) <= 1e-9 and abs(f - vals[i]) <= 1e-9


class TestStone:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_homeomorphism(self, k):
        ctx = rotated_context(np.random.default_rng(k), k)
        sc = stone_homeomorphism(ctx)
        assert sc.bijective and sc.basis_ok
        assert len(sc.pairs) == k == len(enumerate_quasipoints(FiniteLattice.from_context(ctx)))
        for point, q in sc.pairs:
            assert q.atom_index == point.atom_index
