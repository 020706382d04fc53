"""Lazy propagation on a two-variable network, then on a random one.

X -> Y with P(X) = (0.3, 0.7) and P(Y | X) = ((0.9, 0.1), (0.2, 0.8)).
Observing Y = y0 gives P(e) = 0.3 * 0.9 + 0.7 * 0.2 = 0.41.
"""
from pathlib import Path

import numpy as np

from lazyar import compile_network, marginal, parse_evidence, parse_network, prob_evidence, propagate
from lazyar.bench import random_evidence, random_network
from lazyar.oracle import posterior_marginal

DATA = Path(__file__).parent / "data"

net = parse_network((DATA / "toy.json").read_text())
ev = parse_evidence((DATA / "toy_evidence.json").read_text(), net)

tree = compile_network(net)
propagate(tree, ev)
print("P(e)       =", prob_evidence(tree))
print("P(X | e)   =", marginal(tree, net.id("X")))

# Messages are sets of factors, never multiplied out unless they have to be.
# A random network shows what gets posted on each separator.
net = random_network(12, max_parents=2, max_card=3, rng=7)
ev = random_evidence(net, 3, rng=7)
tree = compile_network(net)
stats = propagate(tree, ev, mode="larp")
print(f"\n{len(tree.cliques)} cliques, {stats.messages} messages, largest table {stats.largest_potential_size}")
for s in tree.separators[:3]:
    for (a, b), msg in s.mailbox.items():
        print(f"  {a} -> {b}: {[repr(f) for f in msg.factors]}, {len(msg.deferred)} deferred scalar(s)")

# The three schemes agree; they differ only in which factors they build.
for mode in ("larp", "all-evidence", "clarp"):
    st = propagate(tree, ev, mode)
    print(f"{mode:>13}: P(e) = {prob_evidence(tree):.12f}, largest table {st.largest_potential_size}")

# The brute-force reference gives the same posteriors.
x = len(net) - 1
print("\nP(last | e) engine:", np.round(marginal(tree, x), 6))
print("P(last | e) oracle:", np.round(posterior_marginal(net, ev, x), 6))
