"""Partial derivatives of P(e) read off a tree in equilibrium.

A clique's posterior pool is a product of factors.  Leaving some factors out
and summing the rest down to their domains gives the derivative of P(e)
with respect to the left-out factors.
"""
from pathlib import Path

from lazyar import DerivativeQuery, compile_network, d_f, d_multi, d_separator, d_theta
from lazyar import parameter_posterior, parse_evidence, parse_network, propagate
from lazyar.derivatives import cpd, evidence
from lazyar.oracle import ThetaEntry, exact_partial, finite_diff

DATA = Path(__file__).parent / "data"
net = parse_network((DATA / "toy.json").read_text())
ev = parse_evidence((DATA / "toy_evidence.json").read_text(), net)
X, Y = net.id("X"), net.id("Y")

# clarp keeps findings out of the messages, so we can also differentiate
# with respect to the evidence function of an observed variable.
tree = compile_network(net)
propagate(tree, ev, mode="clarp")

print("dP/dtheta_X        =", d_theta(tree, X).values)           # (0.9, 0.2)
print("dP/dtheta_Y|X      =\n", d_theta(tree, Y).values)          # rows x0, x1; columns y0, y1
print("dP/df(X)           =", d_f(tree, X).values)               # (0.27, 0.14) = P(X, e)
print("dP/df(Y)           =", d_f(tree, Y).values)               # (0.41, 0.59)
print("sum = P(e without Y) =", d_f(tree, Y).values.sum())        # 1.0

# Taking out everything leaves the all-ones table.
full = d_multi(tree, DerivativeQuery(0, [cpd(X), cpd(Y), evidence(Y)]))
print("everything removed =", full.values.tolist())

# Parameter posteriors P(x, pa | e).
print("P(X | e) via theta =", parameter_posterior(tree, X).table)

# Cross-check one entry against the reference definitions.
print("exact partial      =", exact_partial(net, ev, ThetaEntry(X, 0)))
print("finite difference  =", finite_diff(net, ev, ThetaEntry(X, 0)))

# Separator derivatives on a chain X -> Y -> Z: the derivative with respect
# to the message arriving over {Y}.
chain = parse_network((DATA / "chain.json").read_text())
tree = compile_network(chain)
propagate(tree, parse_evidence('{"Z": "z1"}', chain))
a, c = tree.separators[0].endpoints
print(f"\ndP/d(message {c}->{a}) over Y =", d_separator(tree, a, c).values)
