"""Cautious propagation: postponed evidence and retraction from one equilibrium.

An observed variable is instantiated only where it would otherwise be summed
out, i.e. when a message leaves the last clique that contains it.  Messages
therefore keep observed separator variables at full dimension, and the
clique pools keep their evidence indicators unapplied.

Two equilibria are held at once: the ``shadow`` mailboxes carry messages
computed without evidence, the ordinary mailboxes carry cautious messages
with evidence.  A group of findings can be retracted at a clique when the
message factors that absorbed it can be swapped for evidence-free factors
built from the same CPDs, without disturbing factors that carry other
findings.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .derivatives import DerivativeError, DerivativeQuery, DerivativeResult, _Target, evaluate
from .factors import Factor, observe_held, tracking
from .jointree import JunctionTree, initialize
from .model import Evidence
from .propagation import Message, PropagationError, PropagationStats, _incoming, project

__all__ = [
    "RetractionError",
    "RetractionSet",
    "cautious_message",
    "shadow_message",
    "cautious_propagate",
    "retractable_sets",
    "retracted_pool",
    "retracted_prob",
    "retracted_derivative",
]


class RetractionError(ValueError):
    pass


def _message(tree: JunctionTree, a: int, b: int, ev: Evidence, box: str, instantiate, mode: str) -> Message:
    sep = tree.separator(a, b)
    pool = list(tree.cliques[a].potential)
    for m in _incoming(tree, a, b, box):
        pool.extend(m.pool())
    factors, _ = project(
        tree.net,
        pool,
        keep=sep.variables,
        target=tree.cliques[b].variables,
        ev=ev,
        instantiate=instantiate,
        relevance=False,
    )
    msg = Message(tuple(factors), (), a, b, mode)
    observe_held(msg.factors)
    getattr(sep, box)[(a, b)] = msg
    return msg


def cautious_message(tree: JunctionTree, a: int, b: int, ev: Evidence | None = None) -> Message:
    """Message a -> b instantiating only the observed variables of ``a`` not in ``b``."""
    ev = tree.evidence if ev is None else ev
    leaving = ev.observed & (tree.cliques[a].variables - tree.cliques[b].variables)
    return _message(tree, a, b, ev, "mailbox", leaving, "clarp")


def shadow_message(tree: JunctionTree, a: int, b: int) -> Message:
    """Evidence-free message a -> b for the shadow mailboxes."""
    return _message(tree, a, b, Evidence(), "shadow", (), "no-evidence")


def cautious_propagate(tree: JunctionTree, ev: Evidence | None = None) -> PropagationStats:
    """Establish the evidence-free equilibrium, then the cautious one."""
    ev = tree.evidence if ev is None else ev
    initialize(tree, ev)
    collect, distribute = tree.schedule()
    edges = collect + distribute
    start = time.perf_counter()
    with tracking() as t:
        with tracking() as t_shadow:
            for a, b in edges:
                shadow_message(tree, a, b)
        t.record_all(t_shadow)
        mid = time.perf_counter()
        with tracking() as t_cautious:
            for a, b in edges:
                cautious_message(tree, a, b, ev)
        t.record_all(t_cautious)
    end = time.perf_counter()
    tree.mode = "clarp"
    tree.stats = PropagationStats.from_tracker(t, 2 * len(edges), end - start)
    tree.pass_stats = {
        "shadow": PropagationStats.from_tracker(t_shadow, len(edges), mid - start),
        "cautious": PropagationStats.from_tracker(t_cautious, len(edges), end - mid),
    }
    return tree.stats


# ---------------------------------------------------------------------------
# Retraction
# ---------------------------------------------------------------------------


@dataclass
class _Swap:
    source: int
    remove: list[Factor]
    add: list[Factor]


@dataclass
class RetractionSet:
    clique: int
    retractable_groups: list[frozenset]
    _local: set = field(default_factory=set, repr=False)
    _swaps: dict = field(default_factory=dict, repr=False)

    def check(self, retract: Iterable[int]) -> list[frozenset]:
        """Split ``retract`` into whole groups, or raise if that is impossible."""
        retract = frozenset(retract)
        chosen = [g for g in self.retractable_groups if g & retract]
        for g in chosen:
            if not g <= retract:
                raise RetractionError(
                    f"findings {sorted(g & retract)} are only retractable together with {sorted(g - retract)}"
                )
        covered = frozenset().union(*chosen)
        if covered != retract:
            raise RetractionError(f"findings {sorted(retract - covered)} are not retractable here")
        return chosen

    def combinations(self):
        """Every union of groups, the empty retraction included."""
        groups = self.retractable_groups
        for k in range(len(groups) + 1):
            for combo in combinations(groups, k):
                yield frozenset().union(*combo)


def _require_clarp(tree: JunctionTree) -> None:
    if tree.mode != "clarp":
        raise PropagationError("retraction needs a cautious (clarp) equilibrium")


def retractable_sets(tree: JunctionTree, a: int) -> RetractionSet:
    """Evidence groups that can be retracted at clique ``a``, individually or combined."""
    _require_clarp(tree)
    ev = tree.evidence
    clique = tree.cliques[a]
    local = sorted(ev.observed & clique.variables)
    groups = [frozenset({x}) for x in local]
    swaps: dict[frozenset, _Swap] = {}
    for c in tree.neighbors(a):
        sep = tree.separator(c, a)
        with_ev = sep.mailbox[(c, a)].pool()
        without = sep.shadow[(c, a)].pool()
        nodes = with_ev + without
        parent = list(range(len(nodes)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def link(i, j):
            parent[find(i)] = find(j)

        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                fi, fj = nodes[i], nodes[j]
                if fi is fj or fi.lineage & fj.lineage:
                    link(i, j)
                elif i < len(with_ev) and j < len(with_ev) and fi.absorbed & fj.absorbed:
                    link(i, j)
        clusters: dict[int, list[int]] = {}
        for i in range(len(nodes)):
            clusters.setdefault(find(i), []).append(i)
        for members in clusters.values():
            t_side = [nodes[i] for i in members if i < len(with_ev)]
            found = frozenset().union(*(f.absorbed for f in t_side)) if t_side else frozenset()
            if not found:
                continue
            shadow_side = [nodes[i] for i in members if i >= len(with_ev)]
            groups.append(found)
            swaps[found] = _Swap(c, t_side, shadow_side)
    groups.sort(key=lambda g: (min(g), len(g)))
    return RetractionSet(a, groups, set(local), swaps)


def retracted_pool(tree: JunctionTree, a: int, retract: Iterable[int] = ()) -> list[Factor]:
    """The posterior pool at ``a`` with the findings in ``retract`` taken out."""
    rs = retractable_sets(tree, a)
    chosen = rs.check(retract)
    retract = frozenset().union(*chosen) if chosen else frozenset()
    clique = tree.cliques[a]
    pool = list(clique.potential)
    pool += [f for f in clique.evidence if int(f.origin.split(":")[1]) not in retract]
    by_source: dict[int, list[_Swap]] = {}
    for g in chosen:
        if g in rs._swaps:
            sw = rs._swaps[g]
            by_source.setdefault(sw.source, []).append(sw)
    for m in _incoming(tree, a, None):
        factors = m.pool()
        for sw in by_source.get(m.source, []):
            gone = {id(f) for f in sw.remove}
            factors = [f for f in factors if id(f) not in gone] + sw.add
        pool.extend(factors)
    seen = set()
    return [f for f in pool if not (id(f) in seen or seen.add(id(f)))]


def retracted_prob(tree: JunctionTree, a: int, retract: Iterable[int] = ()) -> float:
    """P(e') for e' = evidence minus ``retract``, from clique ``a``."""
    pool = retracted_pool(tree, a, retract)
    return float(evaluate(pool, [], tree.net.cards).table.sum())


def retracted_derivative(
    tree: JunctionTree, a: int, retract: Iterable[int], q: DerivativeQuery | Sequence
) -> DerivativeResult:
    """Derivative of P(e') w.r.t. members of the retracted pool at ``a``."""
    retract = frozenset(retract)
    pool = retracted_pool(tree, a, retract)
    targets = q.remove if isinstance(q, DerivativeQuery) else tuple(q)
    if isinstance(q, DerivativeQuery) and q.clique != a:
        raise DerivativeError(f"query is for clique {q.clique}, not {a}")
    ids = {id(f) for f in pool}
    removed: list[Factor] = []
    extra: list[int] = []
    for t in targets:
        if isinstance(t, Factor):
            f = t
        elif isinstance(t, _Target) and t.kind == "cpd":
            f = tree.cpd(t.var)
        elif isinstance(t, _Target) and t.kind == "evidence":
            if t.var not in tree.cliques[a].variables:
                raise DerivativeError(f"variable {t.var} is not in clique {a}")
            f = next((g for g in pool if g.origin == f"evidence:{t.var}"), None)
            if f is None:
                extra.append(t.var)
                continue
        else:
            raise DerivativeError(f"unsupported target {t!r} for a retracted pool")
        if id(f) not in ids:
            raise DerivativeError(f"{f!r} is not a member of the retracted pool at clique {a}")
        removed.append(f)
    return DerivativeResult(evaluate(pool, removed, tree.net.cards, extra), targets)
