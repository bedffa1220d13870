import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import thermoshift as ts
from oracles import (brute_cycles, brute_sofic_words, brute_words,
                     random_irreducible_graph)


def fib(n):
    a, b = 1, 1
    for _ in range(n - 2):
        a, b = b, a + b
    return b


class TestEnumeration:
    def test_full_shift_counts(self):
        for k in (2, 3, 4):
            s = ts.builtin_shift("full", k)
            for n in range(0, 13 if k == 2 else 8):
                assert ts.count_words(s, n) == k ** n

    def test_full_shift_n3_eight_words(self, full2):
        assert len(ts.enumerate_words(full2, 3)) == 8

    def test_golden_mean_fibonacci_counts(self, golden):
        # |B_n| = F_{n+2}: 2, 3, 5, 8, ...
        counts = [ts.count_words(golden, n) for n in range(1, 26)]
        assert counts[0] == 2 and counts[1] == 3
        for n in range(2, 25):
            assert counts[n] == counts[n - 1] + counts[n - 2]
        assert counts[3] == 8  # n = 4

    def test_empty_word(self, golden):
        assert ts.enumerate_words(golden, 0) == [()]
        assert ts.is_allowable(golden, ())

    def test_enumeration_matches_allowability(self, golden):
        for n in range(1, 7):
            words = ts.enumerate_words(golden, n)
            assert len(set(words)) == len(words)
            assert words == sorted(words)
            assert all(ts.is_allowable(golden, w) for w in words)
            everything = [tuple(w) for w in itertools.product((1, 2), repeat=n)]
            allowed = [w for w in everything if ts.is_allowable(golden, w)]
            assert allowed == words

    def test_sofic_amalgamation_is_full(self, amalgamation3):
        shift = amalgamation3.codomain
        assert ts.enumerate_words(shift, 2) == [(1, 1), (1, 2), (2, 1), (2, 2)]
        assert ts.count_words(shift, 5) == 2 ** 5

    def test_level_restricts_cover_symbols(self):
        s = ts.ShiftSpace(4, {(i, j) for i in range(1, 5) for j in range(1, 5)},
                          ladder=(2, 4))
        assert ts.count_words(s, 3, cover_level=2) == 8
        assert len(ts.enumerate_words(s, 3, level=1)) == 8
        with pytest.raises(ts.ShiftError):
            ts.enumerate_words(s, 2, level=3)

    def test_budget(self, monkeypatch):
        s = ts.builtin_shift("full", 4)
        monkeypatch.setattr("thermoshift.shifts.WORD_BUDGET", 100)
        with pytest.raises(ts.BudgetExceededError):
            ts.enumerate_words(s, 8)

    @given(st.integers(2, 4), st.integers(0, 5), st.data())
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force_on_random_graphs(self, k, n, data):
        seed = data.draw(st.integers(0, 10_000))
        edges = random_irreducible_graph(random.Random(seed), k=k)
        shift = ts.ShiftSpace(k, edges)
        assert ts.enumerate_words(shift, n) == brute_words(range(1, k + 1), edges, n)


class TestAllowability:
    def test_golden_mean_examples(self, golden):
        assert not ts.is_allowable(golden, (2, 2))
        assert ts.is_allowable(golden, (2, 1, 2))
        assert ts.is_allowable(golden, ())

    def test_out_of_range_symbols(self, golden):
        assert not ts.is_allowable(golden, (1, 3))

    def test_sofic_allowability_via_cover(self, e1_15):
        # image word (3, 1) needs a cover edge from fiber(3) into fiber(1)
        assert not ts.is_allowable(e1_15, (3, 1))
        assert ts.is_allowable(e1_15, (2, 1, 2))
        words = ts.enumerate_words(e1_15, 2)
        oracle = brute_sofic_words(range(1, 16), e1_15.edges, e1_15.factor_map, 2)
        assert words == oracle


class TestConnectors:
    def test_full_shift_epsilon(self, full2):
        assert ts.find_connector(full2, (1, 2), (2, 1), 3) == ()

    def test_golden_mean_connectors(self, golden):
        assert ts.find_connector(golden, (1,), (1,), 2) == ()
        assert ts.find_connector(golden, (2,), (2,), 2) == (1,)

    def test_absence_is_a_value(self):
        # two loops joined one-way: nothing connects 2 back to 1
        s = ts.ShiftSpace(2, {(1, 1), (1, 2), (2, 2)})
        assert ts.find_connector(s, (2,), (1,), 4) is None

    def test_nofinite_cover_connector_length_3(self, nofinite_15):
        # u ends inside one block (not at its gateway), v starts inside
        # another: the shortest route is gateway, 1, gateway
        cover = nofinite_15.cover()
        w = ts.find_connector(cover, (5,), (9,), 4)
        assert w == (4, 1, 7)
        assert len(w) == 3

    def test_connector_concatenation_allowable(self, golden):
        words = [w for n in (1, 2, 3) for w in ts.enumerate_words(golden, n)]
        for u in words:
            for v in words:
                w = ts.find_connector(golden, u, v, 2)
                assert w is not None
                assert ts.is_allowable(golden, u + w + v)


class TestFiniteIrreducibility:
    def test_full_shift_trivial_certificate(self, full2):
        cert = ts.check_finite_irreducibility(full2, n_max=3, p_max=2)
        assert cert.p == 0
        assert set(cert.connectors) == {()}
        assert cert.strong_p == 0

    def test_golden_mean_certificate(self, golden):
        cert = ts.check_finite_irreducibility(golden, n_max=4, p_max=2)
        assert cert.p == 1
        assert set(cert.connectors) == {(), (1,)}
        # golden mean is even finitely primitive: connector length 1 always works
        assert cert.strong_p == 1

    def test_e1_certificate_matches_hub_route(self, e1_15):
        # every pair glues through the hub symbol; the classical certificate
        # uses the two length-2 words through it
        cover = e1_15.cover()
        cert = ts.check_finite_irreducibility(cover, n_max=2, p_max=2)
        assert cert.p <= 2
        for w in cert.connectors:
            assert len(w) <= 2
            if len(w) == 2:
                assert 2 in w
        for (u, v), w in cert.connector_table.items():
            assert ts.is_allowable(cover, u + w + v)
        # the fixed pair certificate from the hub: 1,2 and 2,2 also work
        for u in [(3,), (1,), (5,)]:
            for v in [(4,), (1,)]:
                assert any(
                    ts.is_allowable(cover, u + w + v) for w in [(1, 2), (2, 2)])

    def test_certificate_implies_connectors(self, golden):
        cert = ts.check_finite_irreducibility(golden, n_max=3, p_max=2)
        words = [w for n in (1, 2, 3) for w in ts.enumerate_words(golden, n)]
        for u in words:
            for v in words:
                w = ts.find_connector(golden, u, v, cert.p)
                assert w is not None and len(w) <= cert.p

    def test_failure_reported_with_pair(self):
        s = ts.ShiftSpace(2, {(1, 1), (1, 2), (2, 2)})
        res = ts.check_finite_irreducibility(s, n_max=2, p_max=3)
        assert isinstance(res, ts.IrreducibilityFailure)
        assert res.pair[0][-1] == 2 and res.pair[1][0] == 1

    def test_pair_budget(self, full3):
        with pytest.raises(ts.BudgetExceededError):
            ts.check_finite_irreducibility(full3, n_max=4, p_max=1, max_pairs=10)


class TestBip:
    def test_full_shift(self, full2):
        ok, witnesses = ts.check_bip(full2)
        assert ok and witnesses == (1,)

    def test_disjoint_union_of_full_shifts(self):
        edges = {(i, j) for i in (1, 2) for j in (1, 2)}
        edges |= {(i, j) for i in (3, 4) for j in (3, 4)}
        s = ts.ShiftSpace(4, edges)
        ok, witnesses = ts.check_bip(s)
        assert ok
        assert len(witnesses) == 2
        assert {w <= 2 for w in witnesses} == {True, False}

    def test_truncation_scan(self, e1_15):
        ok, witnesses = ts.check_bip(e1_15)
        assert ok
        assert 2 in witnesses  # the hub gives big images and preimages


class TestPeriodicWords:
    def test_full_2_shift(self, full2):
        assert ts.periodic_words(full2, 2, 1) == [(1, 1), (1, 2)]

    def test_golden_mean_period_3(self, golden):
        words = ts.periodic_words(golden, 3, 1)
        assert words == [(1, 1, 1), (1, 1, 2), (1, 2, 1)]
        oracle = brute_cycles((1, 2), golden.edges, 3, 1)
        assert words == oracle

    def test_period_1(self, golden):
        assert ts.periodic_words(golden, 1, 1) == [(1,)]
        assert ts.periodic_words(golden, 1, 2) == []

    def test_anchored_and_cyclic(self, golden):
        for n in (1, 2, 3, 4, 5):
            for a in (1, 2):
                for w in ts.periodic_words(golden, n, a):
                    assert w[0] == a
                    assert ts.is_allowable(golden, w + w)

    def test_sofic_periodic_words(self, e1_15):
        for n in (1, 2, 3, 4):
            for a in (1, 2, 3):
                ws = ts.periodic_words(e1_15, n, a)
                for w in ws:
                    assert w[0] == a
                    assert ts.is_allowable(e1_15, w + w)
                # image graph is verified Markov here, so cycles = wrap edges
                wrap = [w for w in ts.enumerate_words(e1_15, n)
                        if w[0] == a and (w[-1], w[0]) in e1_15.image_edges()]
                assert ws == wrap


class TestConstructionAndJson:
    def test_empty_row_rejected(self):
        with pytest.raises(ts.ShiftError):
            ts.ShiftSpace(2, {(1, 1), (1, 2)})  # symbol 2 has no out-edge

    def test_ladder_validation(self):
        with pytest.raises(ts.ShiftError):
            ts.ShiftSpace(2, {(1, 1), (1, 2), (2, 1)}, ladder=(2, 2))
        with pytest.raises(ts.ShiftError):
            ts.ShiftSpace(2, {(1, 1), (1, 2), (2, 1)}, ladder=(3,))

    def test_factor_map_gaps_rejected(self):
        with pytest.raises(ts.ShiftError):
            ts.ShiftSpace(2, {(1, 1), (1, 2), (2, 1)}, factor_map=(1, 3))

    def test_from_dict_builtin_and_full(self):
        s = ts.shift_from_dict({"alphabet_size": 2, "builtin": "golden-mean"})
        assert s.edges == frozenset({(1, 1), (1, 2), (2, 1)})
        f = ts.shift_from_dict({"alphabet_size": 3, "full": True})
        assert len(f.edges) == 9
        with pytest.raises(ts.ShiftError):
            ts.shift_from_dict({"alphabet_size": 2})
        with pytest.raises(ts.ShiftError):
            ts.shift_from_dict({"alphabet_size": 2, "builtin": "nope"})

    def test_builtin_graph_shapes(self):
        dif = ts.builtin_shift("example-dif", 7)
        expected = {(1, 1), (1, 4), (1, 7),
                    (2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4),
                    (4, 1), (4, 2), (4, 3), (4, 4),
                    (5, 5), (5, 6), (5, 7), (6, 5), (6, 6), (6, 7),
                    (7, 1), (7, 5), (7, 6), (7, 7)}
        assert dif.edges == frozenset(expected)

    def test_default_ladder(self):
        assert ts.default_ladder(15) == (2, 4, 8, 15)
        assert ts.default_ladder(8) == (2, 4, 8)
