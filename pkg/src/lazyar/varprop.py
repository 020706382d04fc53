"""Variable propagation: joints over variable sets that no clique contains.

Collecting a variable X from a clique B that holds it to a target clique A
recomputes the messages on the path B -> A with X kept out of elimination.
Everything else in the tree is reused as is; the recomputation happens on
scratch lists and never touches a mailbox.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .derivatives import evaluate
from .factors import Factor
from .jointree import JunctionTree
from .propagation import DeferredScalar, _require_equilibrium, posterior_pool, project

__all__ = ["VarPropError", "collect", "collect_variable", "joint_over"]


class VarPropError(ValueError):
    pass


def _nearest(tree: JunctionTree, var: int, target: int) -> int:
    holders = [c.id for c in tree.cliques if var in c.variables]
    if not holders:
        raise VarPropError(f"variable {var} is in no clique")
    return min(holders, key=lambda c: (len(tree.path(c, target)), c))


def _instantiated(tree: JunctionTree, d: int, nxt: int) -> frozenset:
    ev = tree.evidence
    here = tree.cliques[d].variables
    if tree.mode == "clarp":
        return ev.observed & (here - tree.cliques[nxt].variables)
    return ev.observed & here


def collect(
    tree: JunctionTree, target: int, carry: dict[int, int], with_path: bool = False
):
    """Pool at ``target`` with each variable in ``carry`` collected from its source clique.

    Parameters
    ----------
    carry : dict
        Variable id -> clique id holding it.

    Returns
    -------
    list of Factor, or (list of Factor, dict) when ``with_path`` is set; the
    dict maps every clique on a collection path to its own extended pool.
    """
    _require_equilibrium(tree)
    ev = tree.evidence
    # carried[d]: variables travelling through clique d on their way to target
    carried: dict[int, set[int]] = {}
    toward: dict[int, int] = {}
    for var, src in carry.items():
        if var in tree.cliques[target].variables:
            raise VarPropError(f"variable {var} is already in clique {target}")
        if var in ev:
            raise VarPropError(f"variable {var} is observed; only unobserved variables are collected")
        path = tree.path(src, target)
        for d, nxt in zip(path, path[1:]):
            carried.setdefault(d, set()).add(var)
            toward[d] = nxt
    relevance = tree.mode == "larp"
    memo: dict[int, tuple[list[Factor], list[DeferredScalar]]] = {}

    def incoming(d: int, exclude: int | None):
        factors: list[Factor] = []
        deferred: list[DeferredScalar] = []
        for nb in tree.neighbors(d):
            if nb == exclude:
                continue
            if toward.get(nb) == d:
                f, df = recompute(nb)
            else:
                m = tree.separator(nb, d).mailbox[(nb, d)]
                f, df = list(m.factors), list(m.deferred)
            factors += f
            deferred += df
        return factors, deferred

    def recompute(d: int):
        if d not in memo:
            nxt = toward[d]
            factors, deferred = incoming(d, nxt)
            keep = tree.separator(d, nxt).variables | frozenset(carried[d])
            memo[d] = project(
                tree.net,
                list(tree.cliques[d].potential) + factors,
                keep=keep,
                target=tree.cliques[nxt].variables | frozenset(carried[d]),
                ev=ev,
                instantiate=_instantiated(tree, d, nxt),
                relevance=relevance,
                deferred=deferred,
            )
        return memo[d]

    def pool_at(d: int) -> list[Factor]:
        factors, deferred = incoming(d, None)
        clique = tree.cliques[d]
        return list(clique.potential) + list(clique.evidence) + factors + [s.factor() for s in deferred]

    pool = pool_at(target)
    if not with_path:
        return pool
    return pool, {d: pool_at(d) for d in carried}


def collect_variable(tree: JunctionTree, var: int, target: int, with_path: bool = False):
    """Posterior pool over ``target`` plus ``var``, collected from the nearest clique holding it."""
    if var in tree.cliques[target].variables:
        raise VarPropError(f"variable {var} is already in clique {target}")
    return collect(tree, target, {var: _nearest(tree, var, target)}, with_path=with_path)


def _plan(tree: JunctionTree, wanted: frozenset) -> tuple[int, dict[int, int]]:
    cards = tree.net.cards
    best = None
    for c in tree.cliques:
        missing = wanted - c.variables
        cost = c.state_space(cards) * int(np.prod([cards[v] for v in missing], dtype=np.int64))
        key = (cost, c.id)
        if best is None or key < best[0]:
            best = (key, c.id, missing)
    _, target, missing = best
    return target, {v: _nearest(tree, v, target) for v in sorted(missing)}


def joint_over(tree: JunctionTree, W: Sequence[int]) -> Factor:
    """P(W, evidence) as a head-less factor over W.

    Observed members of W keep their full dimension (zero off the finding).
    Use ``.values(W)`` for the axes in the caller's order.
    """
    _require_equilibrium(tree)
    W = list(W)
    n = len(tree.net)
    for v in W:
        if not 0 <= v < n:
            raise VarPropError(f"unknown variable {v}")
    if len(set(W)) != len(W):
        raise VarPropError("repeated variable in W")
    ev = tree.evidence
    cards = tree.net.cards
    free = frozenset(v for v in W if v not in ev)
    hosts = tree.cliques_with(free)
    if hosts:
        target = min(hosts, key=lambda c: (c.state_space(cards), c.id)).id
        pool = posterior_pool(tree, target)
    else:
        target, carry = _plan(tree, free)
        pool = collect(tree, target, carry)
    table = evaluate(pool, [], cards, extra=sorted(free))
    values = table.values(sorted(free))
    # observed members of W: full axis, mass only at the finding
    axes = sorted(free)
    for v in sorted(set(W) - free):
        ind = np.zeros(cards[v])
        ind[ev[v]] = 1.0
        values = np.multiply.outer(values, ind)
        axes.append(v)
    return Factor((), axes, values, origin="joint", order=axes)
