import numpy as np
import pytest

from conftest import random_case
from lazyar import oracle
from lazyar.derivatives import evaluate
from lazyar.jointree import compile_network
from lazyar.model import Evidence
from lazyar.propagation import MODES, prob_evidence, propagate
from lazyar.varprop import VarPropError, collect, collect_variable, joint_over


@pytest.fixture(params=MODES)
def mode(request):
    return request.param


class TestChain:
    def test_joint_outside_any_clique(self, chain, mode):
        ev = Evidence()
        tree = compile_network(chain)
        propagate(tree, ev, mode)
        assert not tree.cliques_with({0, 2})
        j = joint_over(tree, [2, 0])
        assert j.variables == (0, 2)
        np.testing.assert_allclose(j.values([2, 0]), oracle.joint_marginal(chain, ev, [2, 0]), atol=1e-15)

    def test_with_evidence(self, chain, mode):
        ev = Evidence({1: 1})
        tree = compile_network(chain)
        propagate(tree, ev, mode)
        j = joint_over(tree, [0, 2])
        np.testing.assert_allclose(j.values([0, 2]), oracle.joint_marginal(chain, ev, [0, 2]), atol=1e-15)
        assert j.table.sum() == pytest.approx(prob_evidence(tree), abs=1e-15)

    def test_observed_member_keeps_axis(self, chain, mode):
        ev = Evidence({2: 1})
        tree = compile_network(chain)
        propagate(tree, ev, mode)
        j = joint_over(tree, [0, 2])
        assert j.table.shape == (2, 2)
        np.testing.assert_allclose(j.values([0, 2]), oracle.joint_marginal(chain, ev, [0, 2]), atol=1e-15)
        assert np.all(j.values([0, 2])[:, 0] == 0)

    def test_inside_one_clique(self, chain):
        tree = compile_network(chain)
        propagate(tree, Evidence())
        np.testing.assert_allclose(
            joint_over(tree, [0, 1]).values([0, 1]), oracle.joint_marginal(chain, None, [0, 1]), atol=1e-15
        )

    def test_mailboxes_untouched(self, chain):
        tree = compile_network(chain)
        propagate(tree, Evidence({1: 0}))
        before = {k: m for s in tree.separators for k, m in s.mailbox.items()}
        joint_over(tree, [0, 2])
        after = {k: m for s in tree.separators for k, m in s.mailbox.items()}
        assert all(before[k] is after[k] for k in before)


class TestCollect:
    def test_collect_variable_path_pools(self, chain):
        tree = compile_network(chain)
        ev = Evidence({1: 0})
        propagate(tree, ev, "all-evidence")
        yz = next(c.id for c in tree.cliques if c.variables == {1, 2})
        pool, path = collect_variable(tree, 0, yz, with_path=True)
        assert set(path) == {c.id for c in tree.cliques if c.id != yz}
        p = prob_evidence(tree)
        for pl in [pool, *path.values()]:
            assert float(evaluate(pl, [], chain.cards).table) == pytest.approx(p, abs=1e-15)

    def test_variable_already_present(self, chain):
        tree = compile_network(chain)
        propagate(tree, Evidence())
        with pytest.raises(VarPropError):
            collect_variable(tree, 1, 0)

    def test_observed_variable_not_collected(self, chain):
        tree = compile_network(chain)
        propagate(tree, Evidence({0: 0}))
        yz = next(c.id for c in tree.cliques if c.variables == {1, 2})
        xy = next(c.id for c in tree.cliques if c.variables == {0, 1})
        with pytest.raises(VarPropError, match="observed"):
            collect(tree, yz, {0: xy})

    def test_bad_W(self, chain):
        tree = compile_network(chain)
        propagate(tree, Evidence())
        with pytest.raises(VarPropError):
            joint_over(tree, [0, 0])
        with pytest.raises(VarPropError):
            joint_over(tree, [9])


class TestAgainstOracle:
    @pytest.mark.parametrize("seed", range(30))
    def test_random_W(self, seed, mode):
        net, ev, rng = random_case(seed, min_vars=4)
        tree = compile_network(net)
        propagate(tree, ev, mode)
        done = 0
        for _ in range(20):
            k = int(rng.integers(2, 5))
            W = [int(v) for v in rng.choice(len(net), size=min(k, len(net)), replace=False)]
            if tree.cliques_with(W):
                continue
            j = joint_over(tree, W)
            np.testing.assert_allclose(j.values(W), oracle.joint_marginal(net, ev, W), atol=1e-12)
            assert j.table.sum() == pytest.approx(oracle.prob_evidence(net, ev), abs=1e-12)
            done += 1
            if done == 3:
                break
