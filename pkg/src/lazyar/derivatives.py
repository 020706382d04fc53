"""Partial derivatives of P(evidence) read off a junction tree in equilibrium.

P(evidence) is the summed contraction of any posterior clique pool, and it is
multilinear in the pool's factors.  Removing a set of member factors and
contracting what is left therefore gives the (mixed) partial derivative with
respect to the removed factors' entries, as a table over their joint domain.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .factors import Factor, contract, expand, multiply, sum_out
from .jointree import JunctionTree
from .propagation import PropagationError, _incoming, _require_equilibrium, posterior_pool, prob_evidence

__all__ = [
    "DerivativeError",
    "DerivativeQuery",
    "DerivativeResult",
    "cpd",
    "evidence",
    "message",
    "d_theta",
    "d_f",
    "d_separator",
    "d_message_factor",
    "d_multi",
    "evaluate",
    "retracted_evidence_prob",
    "parameter_posterior",
]


class DerivativeError(ValueError):
    pass


@dataclass(frozen=True)
class _Target:
    kind: str  # "cpd", "evidence" or "message"
    var: int

    def __repr__(self):
        return f"{self.kind}({self.var})"


def cpd(var: int) -> _Target:
    """Target the CPD of ``var``."""
    return _Target("cpd", var)


def evidence(var: int) -> _Target:
    """Target the evidence function of ``var``."""
    return _Target("evidence", var)


def message(source: int) -> _Target:
    """Target the whole message received from the adjacent clique ``source``."""
    return _Target("message", source)


Target = Union[_Target, Factor]


@dataclass(frozen=True)
class DerivativeQuery:
    clique: int
    remove: tuple

    def __init__(self, clique: int, remove: Sequence[Target]):
        object.__setattr__(self, "clique", clique)
        object.__setattr__(self, "remove", tuple(remove))


@dataclass
class DerivativeResult:
    """A derivative table; ``factor`` has axes in ascending variable id order."""

    factor: Factor
    removed: tuple

    @property
    def variables(self) -> tuple[int, ...]:
        return self.factor.variables

    @property
    def values(self) -> np.ndarray:
        return self.factor.table


def evaluate(
    pool: Sequence[Factor],
    removed: Sequence[Factor],
    cards: dict[int, int],
    extra: Sequence[int] = (),
) -> Factor:
    """Sum over everything outside W of the contraction of ``pool`` minus ``removed``.

    W is the union of the removed factors' domains plus ``extra``.  Removing
    nothing with an empty W gives P(evidence) as a 0-d table.
    """
    ids = {id(f) for f in removed}
    if len(ids) != len(removed):
        raise DerivativeError("a factor is removed twice (second derivatives in one factor are zero)")
    pool_ids = {id(f) for f in pool}
    for f in removed:
        if id(f) not in pool_ids:
            raise DerivativeError(f"{f!r} is not a member of the clique pool")
    rest = [f for f in pool if id(f) not in ids]
    W = set(extra).union(*(f.domain for f in removed))
    c = contract(rest)
    for v in sorted(c.domain - W):
        c = sum_out(c, v)
    c = expand(c, {v: cards[v] for v in W})
    return Factor((), c.variables, c.values(sorted(c.variables)), origin="derivative", order=sorted(c.variables))


def _pool_checked(tree: JunctionTree, a: int) -> list[Factor]:
    _require_equilibrium(tree)
    if not 0 <= a < len(tree.cliques):
        raise DerivativeError(f"no clique {a}")
    return posterior_pool(tree, a)


def _indicator(tree: JunctionTree, a: int, var: int) -> Factor | None:
    for f in tree.cliques[a].evidence:
        if f.origin == f"evidence:{var}":
            return f
    return None


def _check_unabsorbed(rest: Sequence[Factor], var: int) -> None:
    for f in rest:
        if var in f.absorbed:
            raise DerivativeError(
                f"evidence on variable {var} was already instantiated into {f!r}; "
                "propagate in clarp mode to differentiate with respect to it"
            )


def _resolve(tree: JunctionTree, a: int, pool: Sequence[Factor], targets: Sequence[Target]):
    """Map targets onto pool members; returns (removed factors, extra W variables, indicator vars)."""
    removed: list[Factor] = []
    extra: list[int] = []
    dropped_findings: list[int] = []
    for t in targets:
        if isinstance(t, Factor):
            removed.append(t)
            if t.origin.startswith("evidence:"):
                dropped_findings.append(int(t.origin.split(":")[1]))
        elif t.kind == "cpd":
            removed.append(tree.cpd(t.var))
        elif t.kind == "evidence":
            if t.var not in tree.cliques[a].variables:
                raise DerivativeError(f"variable {t.var} is not in clique {a}")
            f = _indicator(tree, a, t.var)
            if f is None:
                # unobserved: the evidence function is the constant 1
                extra.append(t.var)
            else:
                removed.append(f)
                dropped_findings.append(t.var)
        elif t.kind == "message":
            sep = tree.separator(t.var, a)
            msg = sep.mailbox[(t.var, a)]
            removed.extend(msg.pool())
            extra.extend(sep.variables)
        else:
            raise DerivativeError(f"unknown target {t!r}")
    return removed, extra, dropped_findings


def d_multi(tree: JunctionTree, q: DerivativeQuery) -> DerivativeResult:
    """Mixed partial derivative w.r.t. several members of a clique's pool."""
    pool = _pool_checked(tree, q.clique)
    removed, extra, findings = _resolve(tree, q.clique, pool, q.remove)
    ids = {id(f) for f in removed}
    rest = [f for f in pool if id(f) not in ids]
    for x in findings:
        _check_unabsorbed(rest, x)
    table = evaluate(pool, removed, tree.net.cards, extra)
    return DerivativeResult(table, q.remove)


def d_theta(tree: JunctionTree, var: int, clique: int | None = None) -> DerivativeResult:
    """dP(e)/d theta(x|pa) for every CPT entry of ``var``, over fa(var).

    By default the clique hosting the CPD is used; any clique whose pool holds
    the CPD factor gives the same table.
    """
    _require_equilibrium(tree)
    a = tree.assignment[var] if clique is None else clique
    return d_multi(tree, DerivativeQuery(a, [cpd(var)]))


def d_f(tree: JunctionTree, var: int, clique: int | None = None) -> DerivativeResult:
    """dP(e)/d f(x) for every state of ``var``."""
    _require_equilibrium(tree)
    if clique is None:
        holders = tree.cliques_with({var})
        clique = min(holders, key=lambda c: (len(c.variables), c.id)).id
    return d_multi(tree, DerivativeQuery(clique, [evidence(var)]))


def retracted_evidence_prob(tree: JunctionTree, var: int, clique: int | None = None) -> float:
    """P(e minus the finding on ``var``) as the sum of dP(e)/d f(x)."""
    if var not in tree.evidence:
        raise DerivativeError(f"variable {var} is not observed")
    return float(d_f(tree, var, clique).values.sum())


def d_separator(tree: JunctionTree, a: int, c: int) -> DerivativeResult:
    """Derivative w.r.t. the contraction of the message from ``c`` into ``a``, over the separator."""
    _require_equilibrium(tree)
    if c not in tree.neighbors(a):
        raise DerivativeError(f"cliques {a} and {c} are not adjacent")
    return d_multi(tree, DerivativeQuery(a, [message(c)]))


def d_message_factor(tree: JunctionTree, a: int, phi: Factor) -> DerivativeResult:
    """Derivative w.r.t. one factor of a message received by clique ``a``."""
    _require_equilibrium(tree)
    for m in _incoming(tree, a, None):
        if any(f is phi for f in m.pool()):
            return d_multi(tree, DerivativeQuery(a, [phi]))
    raise DerivativeError(f"{phi!r} is not in any message received by clique {a}")


def parameter_posterior(tree: JunctionTree, var: int) -> Factor:
    """P(x, pa | e) = theta * dP(e)/d theta / P(e), axes in ascending id order."""
    p = prob_evidence(tree, check=False)
    if p <= 0:
        raise PropagationError("P(evidence) = 0; the posterior is undefined")
    grad = d_theta(tree, var).factor
    prod = multiply(tree.cpd(var), grad)
    order = sorted(prod.variables)
    return Factor((), order, prod.values(order) / p, origin="posterior", order=order)
