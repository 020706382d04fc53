import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lazyar.bench import random_network
from lazyar.factors import (
    Factor,
    FactorError,
    Potential,
    apply_evidence,
    combine,
    contract,
    divide,
    eliminate_variable,
    expand,
    multiply,
    remove_barren,
    reverse_arc,
    sum_out,
    tracking,
    unit,
)


def _dense(factors, cards):
    """Contract ``factors`` onto every variable in ``cards`` (ascending id)."""
    order = sorted(cards)
    out = np.ones([cards[v] for v in order])
    for f in factors:
        out = out * f.broadcast_to(order)
    return out


class TestFactor:
    def test_canonical_axes(self):
        t = np.arange(6.0).reshape(2, 3)
        f = Factor((5,), (2,), t, order=(5, 2))
        assert f.variables == (5, 2)
        f2 = Factor((2,), (5,), t, order=(2, 5))
        assert f2.variables == (2, 5)
        np.testing.assert_array_equal(f2.values((5, 2)), t.T)

    def test_reorder_on_construction(self):
        t = np.arange(6.0).reshape(2, 3)
        f = Factor((), (1, 0), t, order=(1, 0))
        assert f.variables == (0, 1)
        np.testing.assert_array_equal(f.table, t.T)

    def test_overlap_rejected(self):
        with pytest.raises(FactorError):
            Factor((1,), (1,), np.ones((2, 2)))

    def test_axis_count_checked(self):
        with pytest.raises(FactorError):
            Factor((1,), (), np.ones((2, 2)))

    def test_identity_semantics(self):
        a = Factor((0,), (), [0.5, 0.5])
        b = Factor((0,), (), [0.5, 0.5])
        assert a != b
        assert len(Potential([a, b, a])) == 2


class TestSetAlgebra:
    def test_combine_is_union(self):
        a, b, c = (Factor((i,), (), [1.0, 0.0]) for i in range(3))
        p = combine(Potential([a, b]), Potential([b, c]))
        assert set(map(id, p)) == {id(a), id(b), id(c)}

    def test_divide_is_difference(self):
        a, b = Factor((0,), (), [1.0, 0.0]), Factor((1,), (), [1.0, 0.0])
        p = divide(Potential([a, b]), Potential([a]))
        assert list(p) == [b]

    def test_divide_requires_membership(self):
        a, b = Factor((0,), (), [1.0, 0.0]), Factor((0,), (), [1.0, 0.0])
        with pytest.raises(FactorError):
            divide(Potential([a]), Potential([b]))

    def test_contract_empty_is_one(self):
        c = contract(Potential())
        assert c.domain == frozenset()
        assert float(c.table) == 1.0
        assert float(unit().table) == 1.0

    def test_contract_single_is_identity(self):
        a = Factor((0,), (), [0.2, 0.8])
        assert contract([a]) is a


class TestKernels:
    def test_toy_product(self, toy):
        fx, fy = toy.cpd_factor(0), toy.cpd_factor(1)
        p = multiply(fx, fy)
        assert p.head == (0, 1) and p.tail == ()
        np.testing.assert_allclose(p.values((0, 1)).ravel(), [0.27, 0.03, 0.14, 0.56], atol=1e-15)

    def test_product_head_tail(self):
        f1 = Factor((1,), (0,), np.ones((2, 2)) / 2, order=(1, 0))
        f2 = Factor((2,), (1,), np.ones((2, 2)) / 2, order=(2, 1))
        p = multiply(f1, f2)
        assert p.head == (1, 2) and p.tail == (0,)

    def test_sum_out(self, toy):
        p = multiply(toy.cpd_factor(0), toy.cpd_factor(1))
        np.testing.assert_allclose(sum_out(p, 1).table, [0.3, 0.7], atol=1e-15)
        with pytest.raises(FactorError):
            sum_out(p, 7)

    def test_apply_evidence(self, toy):
        fy = apply_evidence(toy.cpd_factor(1), 1, 0)
        assert fy.head == () and fy.tail == (0,)
        assert fy.absorbed == {1}
        np.testing.assert_array_equal(fy.table, [0.9, 0.2])
        fx = apply_evidence(toy.cpd_factor(0), 0, 0)
        assert fx.domain == frozenset()
        assert float(fx.table) == 0.3

    def test_expand(self):
        f = Factor((0,), (), [0.25, 0.75])
        e = expand(f, {0: 2, 3: 3})
        assert e.variables == (0, 3)
        np.testing.assert_array_equal(e.table, [[0.25] * 3, [0.75] * 3])

    def test_tracking_records_created_tables(self, toy):
        with tracking() as t:
            multiply(toy.cpd_factor(0), toy.cpd_factor(1))
        assert t.largest == 4 and t.count == 1 and t.total == 4


class TestArcReversal:
    def test_toy_bayes_inversion(self, toy):
        fy_new, fx_new = reverse_arc(toy.cpd_factor(0), toy.cpd_factor(1))
        assert fy_new.head == (1,) and fy_new.tail == ()
        np.testing.assert_allclose(fy_new.table, [0.41, 0.59], atol=1e-15)
        assert fx_new.head == (0,) and fx_new.tail == (1,)
        np.testing.assert_allclose(fx_new.values((0, 1))[0, 0], 0.27 / 0.41, rtol=1e-14)

    def test_zero_over_zero_is_zero(self):
        fx = Factor((0,), (), [1.0, 0.0])
        fy = Factor((1,), (0,), [[1.0, 0.0], [0.5, 0.5]], order=(0, 1))
        fy_new, fx_new = reverse_arc(fx, fy)
        np.testing.assert_array_equal(fy_new.table, [1.0, 0.0])
        # y1 never happens: the conditional over x is 0 there, not nan
        np.testing.assert_array_equal(fx_new.values((0, 1))[:, 1], [0.0, 0.0])

    def test_requires_arc(self):
        with pytest.raises(FactorError):
            reverse_arc(Factor((0,), (), [0.5, 0.5]), Factor((1,), (), [0.5, 0.5]))

    def test_headless_fy(self, toy):
        fy = apply_evidence(toy.cpd_factor(1), 1, 0)
        fy_new, fx_new = reverse_arc(toy.cpd_factor(0), fy)
        assert fy_new.head == ()
        np.testing.assert_allclose(float(fy_new.table), 0.41, atol=1e-15)
        np.testing.assert_allclose(fx_new.table, [0.27 / 0.41, 0.14 / 0.41], rtol=1e-14)


class TestBarren:
    def test_toy_keep_x(self, toy):
        fx, fy = toy.cpd_factor(0), toy.cpd_factor(1)
        out = remove_barren([fx, fy], keep={0})
        assert out == [fx]

    def test_fixed_point(self, chain):
        fs = [chain.cpd_factor(v) for v in range(3)]
        assert remove_barren(fs, keep=()) == []

    def test_observed_not_barren(self, toy):
        fx, fy = toy.cpd_factor(0), toy.cpd_factor(1)
        assert len(remove_barren([fx, fy], keep=(), observed={1})) == 2


class TestEliminate:
    def test_toy(self, toy):
        out = eliminate_variable([toy.cpd_factor(0), toy.cpd_factor(1)], 0)
        assert len(out) == 1
        assert out[0].head == (1,) and out[0].tail == ()
        np.testing.assert_allclose(out[0].table, [0.41, 0.59], atol=1e-15)

    def test_not_present(self, toy):
        with pytest.raises(FactorError):
            eliminate_variable([toy.cpd_factor(0)], 1)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        n=st.integers(2, 7),
        n_obs=st.integers(0, 2),
        pick=st.integers(0, 1000),
    )
    def test_conserves_marginal(self, seed, n, n_obs, pick):
        """Eliminating x leaves the same function as multiplying and summing x out."""
        net = random_network(n, 3, 3, seed)
        rng = np.random.default_rng(seed + 1)
        obs = {int(v): int(rng.integers(net.card(int(v)))) for v in rng.choice(n, size=min(n_obs, n - 1), replace=False)}
        phis = [net.cpd_factor(v) for v in range(n)]
        for v, s in obs.items():
            phis = [apply_evidence(f, v, s) if v in f.domain else f for f in phis]
        free = sorted(set(range(n)) - set(obs))
        x = free[pick % len(free)]
        out = eliminate_variable(phis, x)
        assert all(x not in f.domain for f in out)
        cards = {v: net.card(v) for v in free}
        before = _dense(phis, cards).sum(axis=free.index(x))
        rest = {v: c for v, c in cards.items() if v != x}
        np.testing.assert_allclose(_dense(out, rest), before, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 6))
    def test_arc_reversal_conserves_product(self, seed, n):
        """phi(x|.) phi(y|x,.) = phi'(y|.) phi'(x|y,.) wherever phi'(y|.) > 0."""
        net = random_network(n, 3, 3, seed)
        for y in range(n):
            for x in net.parents(y):
                fx, fy = net.cpd_factor(x), net.cpd_factor(y)
                if y in fx.tail:
                    continue
                fy_new, fx_new = reverse_arc(fx, fy)
                order = sorted(fx.domain | fy.domain)
                cards = {v: net.card(v) for v in order}
                np.testing.assert_allclose(
                    _dense([fy_new, fx_new], cards), _dense([fx, fy], cards), atol=1e-12
                )
                # new x factor is a conditional over x
                sums = sum_out(fx_new, x).table
                assert np.all((np.abs(sums - 1) < 1e-12) | (sums == 0))
