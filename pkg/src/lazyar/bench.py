"""Seeded random networks and the evidence-size benchmark.

Networks are ranked DAGs: variable i draws up to ``max_parents`` parents
uniformly among variables 0..i-1, and every CPT row is Dirichlet(1, ..., 1).
Evidence sets pick variables uniformly without replacement and states
uniformly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jointree import JunctionTree, compile_network
from .model import Cpd, Evidence, Network, Variable
from .propagation import propagate

__all__ = ["random_network", "random_evidence", "BenchRow", "run_benchmark"]

BENCH_MODES = ("larp", "all-evidence", "clarp")


def random_network(
    n_vars: int,
    max_parents: int = 2,
    max_card: int = 2,
    rng: np.random.Generator | int | None = None,
    min_card: int = 2,
) -> Network:
    rng = np.random.default_rng(rng)
    cards = rng.integers(min_card, max_card + 1, size=n_vars)
    variables = [
        Variable(i, f"X{i}", tuple(f"s{k}" for k in range(cards[i]))) for i in range(n_vars)
    ]
    cpds = []
    for i in range(n_vars):
        k = int(rng.integers(0, min(max_parents, i) + 1))
        parents = tuple(sorted(int(p) for p in rng.choice(i, size=k, replace=False))) if k else ()
        shape = tuple(int(cards[p]) for p in parents) + (int(cards[i]),)
        rows = rng.dirichlet(np.ones(cards[i]), size=int(np.prod(shape[:-1], dtype=np.int64)))
        cpds.append(Cpd(i, parents, rows.reshape(shape)))
    return Network(variables, cpds)


def random_evidence(net: Network, size: int, rng: np.random.Generator | int | None = None) -> Evidence:
    rng = np.random.default_rng(rng)
    vars = rng.choice(len(net), size=size, replace=False)
    return Evidence({int(v): int(rng.integers(net.card(int(v)))) for v in vars})


@dataclass
class BenchRow:
    n: int
    largest: dict = field(default_factory=dict)
    total: dict = field(default_factory=dict)
    time: dict = field(default_factory=dict)


def run_benchmark(
    n_vars: int = 25,
    max_parents: int = 2,
    max_card: int = 4,
    seed: int = 0,
    sizes=range(0, 16),
    sets_per_size: int = 25,
    modes=BENCH_MODES,
    net: Network | None = None,
    inspect: Callable[[JunctionTree, Evidence, str], None] | None = None,
) -> list[BenchRow]:
    """Average largest-potential size, total created size and time per evidence size.

    Every evidence set is propagated in each mode on the same compiled tree;
    the evidence sets are drawn from one generator seeded with ``seed``.
    ``inspect(tree, ev, mode)``, if given, is called after each propagation
    (outside the timed region) so callers can query the equilibrium.
    """
    rng = np.random.default_rng(seed)
    net = random_network(n_vars, max_parents, max_card, rng) if net is None else net
    tree = compile_network(net)
    rows = []
    for n in sizes:
        row = BenchRow(n)
        acc = {m: [0.0, 0.0, 0.0] for m in modes}
        for _ in range(sets_per_size):
            ev = random_evidence(net, n, rng)
            for m in modes:
                st = propagate(tree, ev, m)
                acc[m][0] += st.largest_potential_size
                acc[m][1] += st.total_created_size
                acc[m][2] += st.elapsed
                if inspect is not None:
                    inspect(tree, ev, m)
        for m in modes:
            row.largest[m] = acc[m][0] / sets_per_size
            row.total[m] = acc[m][1] / sets_per_size
            row.time[m] = acc[m][2] / sets_per_size
        rows.append(row)
    return rows
