"""Joints over variables that share no clique.

X and Z in the chain X -> Y -> Z sit in different cliques.  Collecting X
into {Y, Z} recomputes the one message on the way without summing X out.
"""
from pathlib import Path

import numpy as np

from lazyar import compile_network, joint_over, parse_evidence, parse_network, prob_evidence, propagate
from lazyar.bench import random_evidence, random_network
from lazyar.oracle import joint_marginal

DATA = Path(__file__).parent / "data"
chain = parse_network((DATA / "chain.json").read_text())
ev = parse_evidence('{"Y": "y1"}', chain)
tree = compile_network(chain)
propagate(tree, ev)

X, Z = chain.id("X"), chain.id("Z")
print("cliques holding X and Z:", tree.cliques_with({X, Z}))
j = joint_over(tree, [X, Z])
print("P(X, Z, e) =\n", j.values([X, Z]))
print("sums to P(e):", j.table.sum(), prob_evidence(tree))

# On a random network, pick sets that no clique contains.
net = random_network(14, max_parents=2, max_card=3, rng=11)
ev = random_evidence(net, 2, rng=11)
tree = compile_network(net)
propagate(tree, ev)
rng = np.random.default_rng(0)
shown = 0
while shown < 3:
    W = [int(v) for v in rng.choice(len(net), size=3, replace=False)]
    if tree.cliques_with(W):
        continue
    err = np.abs(joint_over(tree, W).values(W) - joint_marginal(net, ev, W)).max()
    print(f"W = {[net.name(v) for v in W]}: max difference from brute force {err:.1e}")
    shown += 1
