"""Junction tree compilation: moralization, min-fill triangulation, clique tree.

Each clique keeps its CPD factors (a set that propagation never touches) and
the evidence indicators of its observed members.  Separators carry two
mailboxes: ``mailbox`` for messages with evidence and ``shadow`` for the
evidence-free tree used by cautious propagation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .factors import Factor
from .model import Evidence, Network, evidence_indicator

__all__ = [
    "Clique",
    "Separator",
    "JunctionTree",
    "JunctionTreeError",
    "moralize",
    "triangulate",
    "is_chordal",
    "build_tree",
    "initialize",
    "compile_network",
]


class JunctionTreeError(RuntimeError):
    pass


Graph = dict[int, set[int]]


@dataclass(eq=False)
class Clique:
    id: int
    variables: frozenset
    potential: list[Factor] = field(default_factory=list)
    evidence: list[Factor] = field(default_factory=list)

    def state_space(self, cards: dict[int, int]) -> int:
        return int(np.prod([cards[v] for v in self.variables], dtype=np.int64))


@dataclass(eq=False)
class Separator:
    id: int
    endpoints: tuple[int, int]
    variables: frozenset
    mailbox: dict = field(default_factory=dict)
    shadow: dict = field(default_factory=dict)

    def other(self, clique: int) -> int:
        a, b = self.endpoints
        return b if clique == a else a


class JunctionTree:
    """Cliques, separators and the CPD assignment of a compiled network."""

    def __init__(self, net: Network, cliques: list[Clique], separators: list[Separator], root: int = 0):
        self.net = net
        self.cliques = cliques
        self.separators = separators
        if not 0 <= root < len(cliques):
            raise JunctionTreeError(f"root {root} is not a clique id")
        self.root = root
        self._adj: dict[int, list[tuple[int, Separator]]] = {c.id: [] for c in cliques}
        for s in separators:
            a, b = s.endpoints
            self._adj[a].append((b, s))
            self._adj[b].append((a, s))
        for lst in self._adj.values():
            lst.sort(key=lambda t: t[0])
        self.assignment: dict[int, int] = {}
        self._cpd: dict[int, Factor] = {}
        self.evidence = Evidence()
        self.mode: str | None = None
        self.stats = None
        self.pass_stats: dict = {}
        self._posterior_cache: dict = {}
        self._assign_cpds()

    def _assign_cpds(self) -> None:
        for var in range(len(self.net)):
            fam = self.net.family(var)
            host = next((c for c in self.cliques if fam <= c.variables), None)
            if host is None:
                raise JunctionTreeError(f"no clique can hold the CPD of {self.net.name(var)!r}")
            f = self.net.cpd_factor(var)
            self._cpd[var] = f
            self.assignment[var] = host.id
            host.potential.append(f)

    # -- structure ---------------------------------------------------------

    def neighbors(self, clique: int) -> list[int]:
        return [c for c, _ in self._adj[clique]]

    def separator(self, a: int, b: int) -> Separator:
        for c, s in self._adj[a]:
            if c == b:
                return s
        raise JunctionTreeError(f"cliques {a} and {b} are not adjacent")

    def cpd(self, var: int) -> Factor:
        """The CPD factor of ``var`` (a fixed object, hosted by one clique)."""
        return self._cpd[var]

    def cliques_with(self, vars: Iterable[int]) -> list[Clique]:
        vars = frozenset(vars)
        return [c for c in self.cliques if vars <= c.variables]

    def path(self, a: int, b: int) -> list[int]:
        """Clique ids on the tree path from ``a`` to ``b`` inclusive."""
        prev = {a: None}
        queue = [a]
        while queue:
            u = queue.pop(0)
            if u == b:
                break
            for v in self.neighbors(u):
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        return out[::-1]

    def schedule(self, root: int | None = None) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        """Collect (post-order, leaves first) and distribute (pre-order) edges."""
        root = self.root if root is None else root
        collect: list[tuple[int, int]] = []
        distribute: list[tuple[int, int]] = []

        def visit(u, parent):
            for v in self.neighbors(u):
                if v != parent:
                    distribute.append((u, v))
                    visit(v, u)
                    collect.append((v, u))

        visit(root, None)
        return collect, distribute

    def stats_row(self) -> dict:
        """|X|, |C|, max clique state space and total clique state space."""
        cards = self.net.cards
        sizes = [c.state_space(cards) for c in self.cliques]
        return {
            "variables": len(self.net),
            "cliques": len(self.cliques),
            "max_clique_size": max(sizes),
            "total_clique_size": sum(sizes),
        }

    def check(self) -> None:
        """Assert tree shape, separator sets and the running intersection property."""
        if len(self.separators) != len(self.cliques) - 1:
            raise JunctionTreeError("not a tree: wrong number of separators")
        for s in self.separators:
            a, b = s.endpoints
            if s.variables != self.cliques[a].variables & self.cliques[b].variables:
                raise JunctionTreeError(f"separator {s.id} is not the clique intersection")
        seen = {self.root}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(self.cliques):
            raise JunctionTreeError("not connected")
        for var in range(len(self.net)):
            holders = {c.id for c in self.cliques if var in c.variables}
            start = next(iter(holders))
            comp = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for v in self.neighbors(u):
                    if v in holders and v not in comp:
                        comp.add(v)
                        stack.append(v)
            if comp != holders:
                raise JunctionTreeError(f"running intersection fails for {self.net.name(var)!r}")

    def reset_mailboxes(self) -> None:
        for s in self.separators:
            s.mailbox.clear()
            s.shadow.clear()
        self.mode = None
        self.stats = None
        self.pass_stats = {}
        self._posterior_cache.clear()


# ---------------------------------------------------------------------------
# Compilation steps
# ---------------------------------------------------------------------------


def moralize(net: Network) -> Graph:
    g: Graph = {v: set() for v in range(len(net))}
    for v in range(len(net)):
        fam = sorted(net.family(v))
        for i, a in enumerate(fam):
            for b in fam[i + 1:]:
                g[a].add(b)
                g[b].add(a)
    return g


def triangulate(g: Graph, cards: dict[int, int] | None = None) -> tuple[list[int], set[frozenset]]:
    """Greedy min-fill elimination order and the fill edges it adds.

    Ties are broken by the smaller state space of the clique formed, then by
    variable id.
    """
    cards = cards or {v: 1 for v in g}
    work = {v: set(nb) for v, nb in g.items()}
    order: list[int] = []
    fill: set[frozenset] = set()
    while work:
        best = None
        for v in sorted(work):
            nb = sorted(work[v])
            missing = [
                (a, b) for i, a in enumerate(nb) for b in nb[i + 1:] if b not in work[a]
            ]
            space = int(np.prod([cards[u] for u in nb + [v]], dtype=np.int64))
            key = (len(missing), space, v)
            if best is None or key < best[0]:
                best = (key, v, missing)
        _, v, missing = best
        for a, b in missing:
            work[a].add(b)
            work[b].add(a)
            fill.add(frozenset((a, b)))
        for u in work[v]:
            work[u].discard(v)
        del work[v]
        order.append(v)
    return order, fill


def is_chordal(g: Graph) -> bool:
    """Maximum cardinality search followed by the perfect elimination check."""
    if not g:
        return True
    weight = {v: 0 for v in g}
    numbered: list[int] = []
    unnumbered = set(g)
    while unnumbered:
        v = max(sorted(unnumbered), key=lambda u: weight[u])
        numbered.append(v)
        unnumbered.discard(v)
        for u in g[v]:
            if u in unnumbered:
                weight[u] += 1
    # reverse of MCS order is a perfect elimination order iff g is chordal
    peo = numbered[::-1]
    pos = {v: i for i, v in enumerate(peo)}
    for v in peo:
        later = [u for u in g[v] if pos[u] > pos[v]]
        if not later:
            continue
        first = min(later, key=lambda u: pos[u])
        if any(w != first and w not in g[first] for w in later):
            return False
    return True


def build_tree(net: Network, chordal: Graph, order: list[int], root: int = 0) -> JunctionTree:
    """Maximal cliques from the elimination order, joined by a maximum-weight spanning tree."""
    pos = {v: i for i, v in enumerate(order)}
    candidates: list[frozenset] = []
    for v in order:
        c = frozenset({v} | {u for u in chordal[v] if pos[u] > pos[v]})
        candidates.append(c)
    maximal: list[frozenset] = []
    for c in candidates:
        if any(c <= m for m in maximal):
            continue
        if any(c < other for other in candidates):
            continue
        maximal.append(c)
    cliques = [Clique(i, c) for i, c in enumerate(maximal)]
    cards = net.cards

    def space(vs):
        return int(np.prod([cards[v] for v in vs], dtype=np.int64))

    edges = []
    for i in range(len(cliques)):
        for j in range(i + 1, len(cliques)):
            s = cliques[i].variables & cliques[j].variables
            edges.append((-len(s), -space(s), i, j, s))
    edges.sort(key=lambda e: e[:4])
    parent = list(range(len(cliques)))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    separators = []
    for _, _, i, j, s in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            separators.append(Separator(len(separators), (i, j), frozenset(s)))
    return JunctionTree(net, cliques, separators, root=root)


def initialize(tree: JunctionTree, ev: Evidence) -> None:
    """Reset mailboxes and attach the evidence indicators of ``ev``."""
    tree.reset_mailboxes()
    for c in tree.cliques:
        c.evidence = [
            evidence_indicator(x, ev[x], tree.net.card(x)) for x in sorted(ev) if x in c.variables
        ]
    tree.evidence = ev


def compile_network(net: Network, root: int = 0) -> JunctionTree:
    g = moralize(net)
    order, fill = triangulate(g, net.cards)
    chordal = {v: set(nb) for v, nb in g.items()}
    for e in fill:
        a, b = tuple(e)
        chordal[a].add(b)
        chordal[b].add(a)
    tree = build_tree(net, chordal, order, root=root)
    initialize(tree, Evidence())
    return tree
