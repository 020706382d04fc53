"""Lazy arc-reversal propagation in a junction tree.

A message from clique A to clique B is computed from the pool of A's CPD
factors and the messages A received from its other neighbours:

1. pool the factors,
2. drop factors of barren variables,
3. instantiate observed variables,
4. (``larp`` mode only) set aside factors whose domain is d-separated from B
   by the evidence,
5. eliminate every remaining variable outside the separator by arc reversal
   and barren variable elimination,
6. post the result on the separator.

Factors set aside in step 4 are not dropped outright: each connected group of
them is wrapped in a :class:`DeferredScalar` that travels with the message and
is only evaluated when a query needs P(evidence).  Propagation therefore does
none of their work, while probabilities of evidence and derivatives stay
exact.  ``all-evidence`` mode skips step 4 and eliminates everything.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .factors import (
    Factor,
    SizeTracker,
    apply_evidence,
    contract,
    eliminate_variable,
    elimination_cost,
    observe_held,
    remove_barren,
    tracking,
)
from .jointree import JunctionTree
from .model import Evidence, Network

__all__ = [
    "MODES",
    "PropagationError",
    "DeferredScalar",
    "Message",
    "PropagationStats",
    "d_connected",
    "is_relevant",
    "project",
    "compute_message",
    "propagate",
    "posterior_pool",
    "posterior_clique",
    "prob_evidence",
    "marginal",
]

MODES = ("larp", "all-evidence", "clarp")


class PropagationError(RuntimeError):
    pass


class DeferredScalar:
    """A group of factors that only contributes a constant to a message."""

    def __init__(self, factors: Iterable[Factor]):
        self.factors = tuple(factors)
        self.absorbed = frozenset().union(*(f.absorbed for f in self.factors))
        self.lineage = frozenset().union(*(f.lineage for f in self.factors))
        self._factor: Factor | None = None

    def factor(self) -> Factor:
        """The constant as an empty-domain factor, computed once."""
        if self._factor is None:
            phis = list(self.factors)
            while True:
                dom = set().union(*(f.domain for f in phis))
                if not dom:
                    break
                x = min(dom, key=lambda v: (elimination_cost(phis, v), v))
                phis = eliminate_variable(phis, x)
            value = float(contract(phis).table) if phis else 1.0
            self._factor = Factor(
                (), (), np.array(value), origin="deferred", lineage=self.lineage, absorbed=self.absorbed
            )
        return self._factor

    def __repr__(self):
        return f"<DeferredScalar of {len(self.factors)} factors>"


@dataclass(eq=False)
class Message:
    """Factors (each with at most one head) posted on a separator."""

    factors: tuple[Factor, ...]
    deferred: tuple[DeferredScalar, ...]
    source: int
    target: int
    mode: str

    def pool(self) -> list[Factor]:
        return list(self.factors) + [d.factor() for d in self.deferred]

    def contraction(self) -> Factor:
        return contract(self.pool())


@dataclass
class PropagationStats:
    largest_potential_size: int = 0
    total_created_size: int = 0
    tables_created: int = 0
    messages: int = 0
    elapsed: float = 0.0

    @classmethod
    def from_tracker(cls, t: SizeTracker, messages: int, elapsed: float) -> "PropagationStats":
        return cls(t.largest, t.total, t.count, messages, elapsed)


# ---------------------------------------------------------------------------
# d-separation
# ---------------------------------------------------------------------------


def d_connected(net: Network, sources: Iterable[int], observed: Iterable[int]) -> set[int]:
    """Variables d-connected to ``sources`` given ``observed`` (Bayes ball).

    Sources themselves are included unless observed.
    """
    observed = set(observed)
    # ancestors of the evidence decide whether a collider is open
    opened = set()
    stack = list(observed)
    while stack:
        v = stack.pop()
        if v not in opened:
            opened.add(v)
            stack.extend(net.parents(v))
    reached = set()
    visited = set()
    # direction "up": arrived from a child; "down": arrived from a parent
    stack = [(s, "up") for s in sources if s not in observed]
    while stack:
        v, d = stack.pop()
        if (v, d) in visited:
            continue
        visited.add((v, d))
        if v not in observed:
            reached.add(v)
        if d == "up" and v not in observed:
            stack.extend((p, "up") for p in net.parents(v))
            stack.extend((c, "down") for c in net.children[v])
        elif d == "down":
            if v not in observed:
                stack.extend((c, "down") for c in net.children[v])
            if v in opened:
                stack.extend((p, "up") for p in net.parents(v))
    return reached


def is_relevant(phi: Factor, target: Iterable[int], ev: Evidence, net: Network) -> bool:
    """Whether phi's domain is d-connected to the target clique given the evidence."""
    if phi.origin.startswith("evidence:"):
        return True
    dom = phi.domain - ev.observed
    if not dom:
        return False
    return bool(dom & d_connected(net, set(target) - ev.observed, ev.observed))


# ---------------------------------------------------------------------------
# Message projection
# ---------------------------------------------------------------------------


def _components(phis: Sequence[Factor]) -> list[list[Factor]]:
    parent = list(range(len(phis)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for i, f in enumerate(phis):
        for v in f.domain:
            if v in owner:
                parent[find(i)] = find(owner[v])
            else:
                owner[v] = i
    groups: dict[int, list[Factor]] = {}
    for i, f in enumerate(phis):
        groups.setdefault(find(i), []).append(f)
    return list(groups.values())


def project(
    net: Network,
    pool: Iterable[Factor],
    keep: frozenset,
    target: frozenset,
    ev: Evidence,
    instantiate: Iterable[int],
    relevance: bool,
    deferred: Sequence[DeferredScalar] = (),
) -> tuple[list[Factor], list[DeferredScalar]]:
    """Project a factor pool onto ``keep`` (the separator plus any extra variables).

    ``instantiate`` lists the observed variables whose evidence is applied
    here; observed variables not in it must lie in ``keep``.  With
    ``relevance`` set, groups of factors d-separated from ``target`` become
    deferred scalars instead of being eliminated.
    """
    observed = ev.observed
    pool = list(pool)
    observe_held(pool)
    phis = remove_barren(pool, keep, observed)
    for x in sorted(instantiate):
        phis = [apply_evidence(f, x, ev[x]) if x in f.domain else f for f in phis]
    deferred = list(deferred)
    if relevance:
        reach = d_connected(net, set(target) - observed, observed)
        kept = []
        for comp in _components(phis):
            dom = frozenset().union(*(f.domain for f in comp))
            if dom & keep or any(f.domain & reach for f in comp):
                kept.extend(comp)
            else:
                deferred.append(DeferredScalar(comp))
        phis = kept

    def weight(v, c):
        return 1 if v in observed else c

    while True:
        todo = set().union(*(f.domain for f in phis)) - keep
        if not todo:
            break
        x = min(todo, key=lambda v: (elimination_cost(phis, v, weight), v))
        if x in observed:
            raise PropagationError(f"observed variable {x} would be summed out")
        phis = eliminate_variable(phis, x)
    return phis, deferred


def _incoming(tree: JunctionTree, a: int, exclude: int | None, box: str = "mailbox") -> list[Message]:
    msgs = []
    for c in tree.neighbors(a):
        if c == exclude:
            continue
        sep = tree.separator(c, a)
        m = getattr(sep, box).get((c, a))
        if m is None:
            raise PropagationError(f"message {c}->{a} has not been computed")
        msgs.append(m)
    return msgs


def compute_message(tree: JunctionTree, a: int, b: int, ev: Evidence | None = None, mode: str = "larp") -> Message:
    """Compute the message from clique ``a`` to ``b`` and post it on their separator."""
    if mode not in ("larp", "all-evidence"):
        raise ValueError(f"compute_message handles larp and all-evidence, not {mode!r}")
    ev = tree.evidence if ev is None else ev
    sep = tree.separator(a, b)
    clique = tree.cliques[a]
    incoming = _incoming(tree, a, b)
    pool = list(clique.potential)
    deferred: list[DeferredScalar] = []
    for m in incoming:
        pool.extend(m.factors)
        deferred.extend(m.deferred)
    factors, deferred = project(
        tree.net,
        pool,
        keep=sep.variables,
        target=tree.cliques[b].variables,
        ev=ev,
        instantiate=ev.observed & clique.variables,
        relevance=(mode == "larp"),
        deferred=deferred,
    )
    msg = Message(tuple(factors), tuple(deferred), a, b, mode)
    observe_held(msg.factors)
    sep.mailbox[(a, b)] = msg
    return msg


def propagate(tree: JunctionTree, ev: Evidence | None = None, mode: str = "larp") -> PropagationStats:
    """Enter ``ev`` and run collect and distribute flows to equilibrium."""
    if mode == "clarp":
        from .cautious import cautious_propagate

        return cautious_propagate(tree, ev)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    from .jointree import initialize

    ev = tree.evidence if ev is None else ev
    initialize(tree, ev)
    collect, distribute = tree.schedule()
    start = time.perf_counter()
    with tracking() as t:
        for a, b in collect + distribute:
            compute_message(tree, a, b, ev, mode)
    elapsed = time.perf_counter() - start
    tree.mode = mode
    tree.stats = PropagationStats.from_tracker(t, len(collect) + len(distribute), elapsed)
    return tree.stats


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def _require_equilibrium(tree: JunctionTree) -> None:
    if tree.mode is None:
        raise PropagationError("the tree has not been propagated")


def posterior_pool(tree: JunctionTree, a: int) -> list[Factor]:
    """Members of the posterior clique potential: CPDs, indicators, incoming messages."""
    _require_equilibrium(tree)
    clique = tree.cliques[a]
    pool = list(clique.potential) + list(clique.evidence)
    for m in _incoming(tree, a, None):
        pool.extend(m.pool())
    return pool


def posterior_clique(tree: JunctionTree, a: int) -> Factor:
    """P(A, evidence) over the unobserved members of clique ``a``."""
    key = ("posterior", a)
    if key in tree._posterior_cache:
        return tree._posterior_cache[key]
    f = contract(posterior_pool(tree, a))
    for x in sorted(tree.evidence.observed & f.domain):
        f = apply_evidence(f, x, tree.evidence[x])
    tree._posterior_cache[key] = f
    return f


def prob_evidence(tree: JunctionTree, check: bool = True, rtol: float = 1e-9) -> float:
    """P(evidence) from the root clique; with ``check`` every clique must agree."""
    _require_equilibrium(tree)
    p = float(posterior_clique(tree, tree.root).table.sum())
    if check:
        for c in tree.cliques:
            q = float(posterior_clique(tree, c.id).table.sum())
            if abs(q - p) > rtol * max(abs(p), abs(q)) + 1e-300:
                raise PropagationError(
                    f"clique {c.id} gives P(e)={q!r} but root gives {p!r}"
                )
    return p


def marginal(tree: JunctionTree, x: int) -> np.ndarray:
    """P(x | evidence), via the evidence-function derivative over P(evidence)."""
    from .derivatives import d_f

    _require_equilibrium(tree)
    if x in tree.evidence:
        out = np.zeros(tree.net.card(x))
        out[tree.evidence[x]] = 1.0
        return out
    p = prob_evidence(tree, check=False)
    if p <= 0:
        raise PropagationError("P(evidence) = 0; the posterior is undefined")
    return d_f(tree, x).values / p
