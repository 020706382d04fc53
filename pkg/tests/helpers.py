"""Oracle-side expectations for derivative queries on a compiled tree."""
import itertools

import numpy as np

from lazyar import oracle


def side(tree, a, c):
    """Clique ids reachable from ``a`` without crossing the edge to ``c``."""
    seen, stack = {a}, [a]
    while stack:
        u = stack.pop()
        for v in tree.neighbors(u):
            if v not in seen and not (u == a and v == c):
                seen.add(v)
                stack.append(v)
    return seen


def separator_derivative(tree, ev, a, c):
    """Sum over all but the separator of every CPD and finding on a's side."""
    net = tree.net
    cliques = side(tree, a, c)
    cpds = [v for v in range(len(net)) if tree.assignment[v] in cliques]
    seen_vars = set().union(*(tree.cliques[i].variables for i in cliques))
    findings = [v for v in ev if v in seen_vars]
    S = sorted(tree.separator(a, c).variables)
    return oracle.sum_product(net, ev, cpds, S, finding_vars=findings)


def mixed_derivative(net, ev, thetas, fs):
    """Table of d^k P(e) / d theta(X_i ...) d f(Y_j ...) over the union of their domains, ascending ids."""
    W = sorted(set().union(*(net.family(x) for x in thetas), fs))
    out = np.zeros([net.card(v) for v in W])
    for cfg in itertools.product(*[range(net.card(v)) for v in W]):
        val = dict(zip(W, cfg))
        entries = [oracle.ThetaEntry(x, val[x], tuple(val[p] for p in net.parents(x))) for x in thetas]
        entries += [oracle.FEntry(y, val[y]) for y in fs]
        out[cfg] = oracle.exact_partial(net, ev, entries)
    return out


def separator_fd(tree, a, c, h=1e-5):
    """Central difference of P(e) in each entry of the message c -> a, over the separator."""
    from lazyar.derivatives import evaluate
    from lazyar.factors import Factor, contract, expand
    from lazyar.propagation import posterior_pool

    cards = tree.net.cards
    sep = tree.separator(a, c)
    msg = sep.mailbox[(c, a)].pool()
    ids = {id(f) for f in msg}
    rest = [f for f in posterior_pool(tree, a) if id(f) not in ids]
    S = sorted(sep.variables)
    m = expand(contract(msg), {v: cards[v] for v in S}).values(S)
    out = np.zeros(m.shape)
    for idx in np.ndindex(*m.shape):
        vals = []
        for step in (h, -h):
            t = m.copy()
            t[idx] += step
            vals.append(float(evaluate(rest + [Factor((), S, t, order=S)], [], cards).table))
        out[idx] = (vals[0] - vals[1]) / (2 * h)
    return out
