"""Factors with head/tail structure and the set-valued potential algebra.

A :class:`Factor` is a dense non-negative table phi(H|T).  A :class:`Potential`
is an unmultiplied *set* of factors; combination and division are set union
and set difference, and only :func:`contract` does arithmetic.

The elimination machinery used by lazy propagation lives here too: arc
reversal, barren variable removal, instantiation and single variable
elimination.
"""
from __future__ import annotations

import contextvars
from contextlib import contextmanager
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Factor",
    "Potential",
    "FactorError",
    "SizeTracker",
    "tracking",
    "unit",
    "combine",
    "divide",
    "contract",
    "multiply",
    "sum_out",
    "apply_evidence",
    "reverse_arc",
    "remove_barren",
    "eliminate_variable",
    "elimination_cost",
]


class FactorError(ValueError):
    """Raised when a factor operation's structural precondition fails."""


# ---------------------------------------------------------------------------
# Size instrumentation
# ---------------------------------------------------------------------------


class SizeTracker:
    """Accumulates the state space sizes of every table materialized.

    ``largest`` also covers tables that are only handled, such as the input
    CPDs of a message computation or CPDs forwarded unchanged inside a
    message; ``total`` and ``count`` cover created tables only.
    """

    def __init__(self):
        self.largest = 0
        self.total = 0
        self.count = 0

    def record(self, size: int) -> None:
        self.count += 1
        self.total += size
        if size > self.largest:
            self.largest = size

    def observe(self, size: int) -> None:
        """Count a table that is handled (an input or a message member) but not created."""
        if size > self.largest:
            self.largest = size

    def record_all(self, other: "SizeTracker") -> None:
        """Fold in the counts of a nested tracker."""
        self.count += other.count
        self.total += other.total
        self.largest = max(self.largest, other.largest)


_TRACKER: contextvars.ContextVar[SizeTracker | None] = contextvars.ContextVar(
    "lazyar_size_tracker", default=None
)


@contextmanager
def tracking(tracker: SizeTracker | None = None):
    """Record every table created inside the block into ``tracker``."""
    tracker = SizeTracker() if tracker is None else tracker
    token = _TRACKER.set(tracker)
    try:
        yield tracker
    finally:
        _TRACKER.reset(token)


def observe_held(factors: Iterable["Factor"]) -> None:
    """Let the active tracker see the sizes of factors handled without being created."""
    t = _TRACKER.get()
    if t is not None:
        for f in factors:
            t.observe(f.size)


def _record(f: "Factor") -> "Factor":
    t = _TRACKER.get()
    if t is not None:
        t.record(f.size)
    return f


# ---------------------------------------------------------------------------
# Factor
# ---------------------------------------------------------------------------


class Factor:
    """A dense table phi(H|T) over ``dom = H u T``.

    Axes are laid out row-major over the head variables sorted by id followed
    by the tail variables sorted by id.  Factors are compared by identity, so
    two equal tables with different origins are distinct set members.

    Parameters
    ----------
    head, tail : iterable of int
        Disjoint variable ids.
    table : array_like
        Values.  If ``order`` is given the axes of ``table`` follow ``order``
        and are transposed into the canonical layout.
    origin : str
        Provenance tag, e.g. ``"cpd:3"``, ``"evidence:3"`` or ``"computed"``.
    lineage : frozenset of int
        Ids of the CPDs this factor was computed from.
    absorbed : frozenset of int
        Ids of observed variables whose evidence was instantiated into it.
    """

    __slots__ = ("head", "tail", "table", "origin", "lineage", "absorbed")

    def __init__(
        self,
        head: Iterable[int],
        tail: Iterable[int],
        table,
        origin: str = "computed",
        lineage: frozenset = frozenset(),
        absorbed: frozenset = frozenset(),
        order: Sequence[int] | None = None,
    ):
        head = tuple(sorted(head))
        tail = tuple(sorted(tail))
        if set(head) & set(tail):
            raise FactorError(f"head {head} and tail {tail} overlap")
        table = np.asarray(table, dtype=float)
        canonical = head + tail
        if order is not None:
            order = tuple(order)
            if sorted(order) != sorted(canonical):
                raise FactorError(f"order {order} does not match domain {canonical}")
            if order != canonical:
                table = np.transpose(table, [order.index(v) for v in canonical])
        if table.ndim != len(canonical):
            raise FactorError(
                f"table has {table.ndim} axes but domain has {len(canonical)} variables"
            )
        self.head = head
        self.tail = tail
        self.table = table
        self.origin = origin
        self.lineage = frozenset(lineage)
        self.absorbed = frozenset(absorbed)

    @property
    def variables(self) -> tuple[int, ...]:
        return self.head + self.tail

    @property
    def domain(self) -> frozenset:
        return frozenset(self.head + self.tail)

    @property
    def size(self) -> int:
        return int(self.table.size)

    def card(self, var: int) -> int:
        return self.table.shape[self.variables.index(var)]

    @property
    def cards(self) -> dict[int, int]:
        return dict(zip(self.variables, self.table.shape))

    def values(self, order: Sequence[int]) -> np.ndarray:
        """Table with axes permuted to ``order`` (a permutation of the domain)."""
        vs = self.variables
        if sorted(order) != sorted(vs):
            raise FactorError(f"order {tuple(order)} does not match domain {vs}")
        return np.transpose(self.table, [vs.index(v) for v in order])

    def broadcast_to(self, order: Sequence[int]) -> np.ndarray:
        """View aligned to ``order`` with singleton axes for absent variables."""
        vs = self.variables
        present = [v for v in order if v in vs]
        arr = np.transpose(self.table, [vs.index(v) for v in present])
        shape = [self.table.shape[vs.index(v)] if v in vs else 1 for v in order]
        return arr.reshape(shape)

    def __repr__(self):
        h = ",".join(map(str, self.head))
        t = ",".join(map(str, self.tail))
        return f"<Factor {self.origin} phi({h}|{t}) size={self.size}>"


def unit() -> Factor:
    """The constant-1 factor on the empty domain."""
    return Factor((), (), np.array(1.0), origin="unit")


# ---------------------------------------------------------------------------
# Potentials: set algebra
# ---------------------------------------------------------------------------


def _dedupe(factors: Iterable[Factor]) -> tuple[Factor, ...]:
    seen = set()
    out = []
    for f in factors:
        if id(f) not in seen:
            seen.add(id(f))
            out.append(f)
    return tuple(out)


class Potential:
    """A set of factors kept unmultiplied.  The empty set is the vacuous potential."""

    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Factor] = ()):
        self.factors = _dedupe(factors)

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)

    def __contains__(self, f):
        return any(g is f for g in self.factors)

    @property
    def domain(self) -> frozenset:
        return frozenset().union(*(f.domain for f in self.factors))

    def __repr__(self):
        return f"Potential({list(self.factors)!r})"


def combine(p1: Potential, p2: Potential) -> Potential:
    return Potential(tuple(p1) + tuple(p2))


def divide(p1: Potential, p2: Potential) -> Potential:
    """Set difference ``p1 \\ p2``; every member of ``p2`` must be in ``p1``."""
    for f in p2:
        if f not in p1:
            raise FactorError(f"division by non-member {f!r}")
    return Potential(f for f in p1 if f not in p2)


def contract(p: Potential | Iterable[Factor]) -> Factor:
    """Pointwise product of all member factors; the vacuous potential gives 1."""
    factors = tuple(p)
    if not factors:
        return unit()
    if len(factors) == 1:
        return factors[0]
    return reduce(multiply, factors)


# ---------------------------------------------------------------------------
# Table kernels
# ---------------------------------------------------------------------------


def multiply(f1: Factor, f2: Factor) -> Factor:
    head = set(f1.head) | set(f2.head)
    tail = (set(f1.tail) | set(f2.tail)) - head
    order = tuple(sorted(head)) + tuple(sorted(tail))
    table = f1.broadcast_to(order) * f2.broadcast_to(order)
    out = Factor(
        head,
        tail,
        table,
        lineage=f1.lineage | f2.lineage,
        absorbed=f1.absorbed | f2.absorbed,
    )
    return _record(out)


def sum_out(f: Factor, x: int) -> Factor:
    if x not in f.domain:
        raise FactorError(f"variable {x} not in domain of {f!r}")
    axis = f.variables.index(x)
    out = Factor(
        (v for v in f.head if v != x),
        (v for v in f.tail if v != x),
        f.table.sum(axis=axis),
        lineage=f.lineage,
        absorbed=f.absorbed,
    )
    return _record(out)


def apply_evidence(f: Factor, x: int, state: int) -> Factor:
    """Instantiate ``x = state``: slice the table and drop ``x`` from the domain."""
    if x not in f.domain:
        raise FactorError(f"variable {x} not in domain of {f!r}")
    axis = f.variables.index(x)
    out = Factor(
        (v for v in f.head if v != x),
        (v for v in f.tail if v != x),
        np.take(f.table, state, axis=axis),
        lineage=f.lineage,
        absorbed=f.absorbed | {x},
    )
    return _record(out)


def _ones(cards: dict[int, int]) -> Factor:
    order = tuple(sorted(cards))
    return Factor((), order, np.ones([cards[v] for v in order]), origin="ones")


def expand(f: Factor, cards: dict[int, int]) -> Factor:
    """Broadcast ``f`` over the extra variables in ``cards`` (values repeat)."""
    missing = {v: c for v, c in cards.items() if v not in f.domain}
    if not missing:
        return f
    return multiply(f, _ones(missing))


def reverse_arc(fx: Factor, fy: Factor) -> tuple[Factor, Factor]:
    """Reverse the arc X -> Y between phi(X|.) and phi(Y|X,.).

    ``fy`` may have an empty head (its head was instantiated by evidence), in
    which case the first returned factor has an empty head too.

    Returns
    -------
    fy_new, fx_new
        ``fy_new = sum_X fx*fy`` and ``fx_new = fx*fy / fy_new`` with 0/0 := 0.
    """
    if len(fx.head) != 1:
        raise FactorError(f"reverse_arc needs a single head in fx, got {fx.head}")
    x = fx.head[0]
    if len(fy.head) > 1 or x not in fy.tail or x in fy.head:
        raise FactorError(f"{fy!r} must have at most one head and {x} in its tail")
    psi = multiply(fx, fy)
    fy_new = sum_out(psi, x)
    denom = fy_new.broadcast_to(psi.variables)
    num = psi.table
    if np.any((denom == 0) & (num != 0)):
        raise FactorError("non-zero mass over a zero marginal in arc reversal")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), 0.0)
    fx_new = Factor(
        (x,),
        (v for v in psi.variables if v != x),
        ratio,
        lineage=psi.lineage,
        absorbed=psi.absorbed,
        order=psi.variables,
    )
    return fy_new, _record(fx_new)


def remove_barren(
    phis: Iterable[Factor], keep: Iterable[int], observed: Iterable[int] = ()
) -> list[Factor]:
    """Drop factors of barren head variables until a fixed point is reached."""
    phis = list(phis)
    protected = set(keep) | set(observed)
    changed = True
    while changed:
        changed = False
        for i, f in enumerate(phis):
            if len(f.head) != 1:
                continue
            x = f.head[0]
            if x in protected:
                continue
            if any(x in g.domain for j, g in enumerate(phis) if j != i):
                continue
            del phis[i]
            changed = True
            break
    return phis


def elimination_cost(phis: Sequence[Factor], x: int, weight=None) -> int:
    """State space size of the domain left after eliminating ``x``."""
    cards: dict[int, int] = {}
    for f in phis:
        if x in f.domain:
            cards.update(f.cards)
    cards.pop(x, None)
    size = 1
    for v, c in cards.items():
        size *= weight(v, c) if weight else c
    return size


def eliminate_variable(phis: Iterable[Factor], x: int) -> list[Factor]:
    """Eliminate ``x`` by arc reversals and barren variable removal.

    If ``x`` heads exactly one factor, that factor is reversed against every
    factor holding ``x`` in its tail (smallest resulting domain first, ties by
    head id) and then dropped as barren.  Otherwise the factors over ``x`` are
    multiplied and ``x`` is summed out.
    """
    phis = list(phis)
    touching = [f for f in phis if x in f.domain]
    rest = [f for f in phis if x not in f.domain]
    if not touching:
        raise FactorError(f"variable {x} is in no factor's domain")
    heads = [f for f in touching if x in f.head]
    others = [f for f in touching if x not in f.head]
    if len(heads) == 1 and len(heads[0].head) == 1 and all(len(f.head) <= 1 for f in others):
        fx = heads[0]
        pending = list(others)
        done = []
        while pending:
            pending.sort(
                key=lambda g: (
                    int(np.prod([c for v, c in {**fx.cards, **g.cards}.items() if v != x])),
                    g.head[0] if g.head else -1,
                    g.tail,
                )
            )
            fy = pending.pop(0)
            fy_new, fx = reverse_arc(fx, fy)
            done.append(fy_new)
        # fx now only mentions x as head and nothing else refers to x: barren.
        return rest + done
    prod = contract(touching)
    return rest + [sum_out(prod, x)]
