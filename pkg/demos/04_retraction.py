"""Retracting findings after one cautious propagation.

A -> C <- B, C -> D with findings on A, B and D.  The message from
{A, B, C} into {C, D} eliminates A and B together, so at {C, D} the two
findings can only be retracted as one group.
"""
from pathlib import Path

from lazyar import compile_network, parse_evidence, parse_network, propagate
from lazyar import retractable_sets, retracted_derivative, retracted_prob
from lazyar.derivatives import cpd
from lazyar.oracle import prob_evidence as brute_prob

DATA = Path(__file__).parent / "data"
net = parse_network((DATA / "collider.json").read_text())
ev = parse_evidence((DATA / "collider_evidence.json").read_text(), net)
tree = compile_network(net)
propagate(tree, ev, mode="clarp")

for clique in tree.cliques:
    rs = retractable_sets(tree, clique.id)
    names = sorted(net.name(v) for v in clique.variables)
    print(f"clique {names}: groups {[sorted(net.name(v) for v in g) for g in rs.retractable_groups]}")
    for r in rs.combinations():
        p = retracted_prob(tree, clique.id, r)
        label = ",".join(sorted(net.name(v) for v in r)) or "-"
        print(f"  retract {label:>6}: P(e') = {p:.10f}   brute force {brute_prob(net, ev.without(r)):.10f}")

# Derivatives under the reduced evidence come from the same equilibrium.
cd = next(c.id for c in tree.cliques if c.variables == {net.id("C"), net.id("D")})
r = retracted_derivative(tree, cd, {net.id("A"), net.id("B")}, [cpd(net.id("D"))])
print("\ndP(e')/dtheta_D|C with A, B retracted =\n", r.values)

try:
    retracted_prob(tree, cd, {net.id("A")})
except ValueError as exc:
    print("\nretracting A alone at {C, D}:", exc)
