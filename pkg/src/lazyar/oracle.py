"""Brute-force reference computations by full enumeration.

Nothing here touches junction trees, head/tail factors or set potentials; the
joint is built directly from the CPT arrays.  P(evidence) is multilinear in
every CPT entry and every evidence-function entry, which makes exact partial
derivatives available by 0/1 substitution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .model import Evidence, Network

MAX_STATES = 2**24


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaEntry:
    """CPT entry theta(var = state | parents = parent_config)."""

    var: int
    state: int
    parent_config: tuple[int, ...] = ()


@dataclass(frozen=True)
class FEntry:
    """Evidence-function entry f(var = state)."""

    var: int
    state: int


Entry = Union[ThetaEntry, FEntry]


def _guard(net: Network, vars: Iterable[int] | None = None) -> None:
    vars = range(len(net)) if vars is None else vars
    size = 1
    for v in vars:
        size *= net.card(v)
    if size > MAX_STATES:
        raise OracleError(f"joint state space {size} exceeds {MAX_STATES}")


def _evidence_functions(net: Network, ev: Evidence) -> list[np.ndarray]:
    fs = []
    for v in range(len(net)):
        f = np.ones(net.card(v))
        if v in ev:
            f = np.zeros(net.card(v))
            f[ev[v]] = 1.0
        fs.append(f)
    return fs


def _joint(net: Network, tables: Sequence[np.ndarray], fs: Sequence[np.ndarray]) -> np.ndarray:
    n = len(net)
    shape = [net.card(v) for v in range(n)]
    joint = np.ones(shape)
    for v in range(n):
        axes = list(net.parents(v)) + [v]
        # move CPT axes into variable-id order, then broadcast
        perm = np.argsort(axes)
        t = np.transpose(tables[v], perm)
        full = [1] * n
        for a in sorted(axes):
            full[a] = shape[a]
        joint = joint * t.reshape(full)
        fshape = [1] * n
        fshape[v] = shape[v]
        joint = joint * fs[v].reshape(fshape)
    return joint


def enum_joint(net: Network, ev: Evidence | None = None) -> np.ndarray:
    """Full joint table (axes in variable-id order) zeroed off the evidence."""
    _guard(net)
    ev = ev or Evidence()
    return _joint(net, [c.table for c in net.cpds], _evidence_functions(net, ev))


def prob_evidence(net: Network, ev: Evidence | None = None) -> float:
    return float(enum_joint(net, ev).sum())


def joint_marginal(net: Network, ev: Evidence | None, vars: Sequence[int]) -> np.ndarray:
    """P(vars, evidence) with axes in the given order."""
    joint = enum_joint(net, ev)
    vars = list(vars)
    others = tuple(v for v in range(len(net)) if v not in vars)
    m = joint.sum(axis=others)
    kept = [v for v in range(len(net)) if v in vars]
    return np.transpose(m, [kept.index(v) for v in vars])


def posterior_marginal(net: Network, ev: Evidence | None, var: int) -> np.ndarray:
    m = joint_marginal(net, ev, [var])
    return m / m.sum()


def _substituted(net: Network, ev: Evidence, subs: dict[Entry, float]) -> float:
    tables = [c.table.copy() for c in net.cpds]
    fs = _evidence_functions(net, ev)
    for entry, value in subs.items():
        if isinstance(entry, ThetaEntry):
            idx = tuple(entry.parent_config) + (entry.state,)
            tables[entry.var][idx] = value
        else:
            fs[entry.var][entry.state] = value
    return float(_joint(net, tables, fs).sum())


def exact_partial(net: Network, ev: Evidence | None, target: Entry | Sequence[Entry]) -> float:
    """Exact (mixed) partial derivative of P(evidence) by multilinear substitution.

    For a single entry the derivative is P(entry=1) - P(entry=0); for k entries
    it is the alternating sum over the 2**k corner substitutions.  CPT rows are
    not renormalized.
    """
    _guard(net)
    ev = ev or Evidence()
    entries = [target] if isinstance(target, (ThetaEntry, FEntry)) else list(target)
    if len(set(entries)) != len(entries):
        raise OracleError("repeated entry in a mixed partial (identically zero)")
    total = 0.0
    k = len(entries)
    for corner in itertools.product((0.0, 1.0), repeat=k):
        sign = (-1) ** (k - int(sum(corner)))
        total += sign * _substituted(net, ev, dict(zip(entries, corner)))
    return total


def theta_entries(net: Network, var: int) -> list[ThetaEntry]:
    """All entries of the CPT of ``var`` in (parents..., child) row-major order."""
    pcards = [net.card(p) for p in net.parents(var)]
    return [
        ThetaEntry(var, s, pc)
        for pc in itertools.product(*[range(c) for c in pcards])
        for s in range(net.card(var))
    ]


def theta_gradient(net: Network, ev: Evidence | None, var: int) -> np.ndarray:
    """dP(evidence)/d theta for every entry of the CPT of ``var``.

    Returned with axes ordered by sorted variable id over fa(var).
    """
    parents = net.parents(var)
    grads = np.array([exact_partial(net, ev, e) for e in theta_entries(net, var)])
    axes = list(parents) + [var]
    grads = grads.reshape([net.card(v) for v in axes])
    return np.transpose(grads, np.argsort(axes))


def f_gradient(net: Network, ev: Evidence | None, var: int) -> np.ndarray:
    return np.array([exact_partial(net, ev, FEntry(var, s)) for s in range(net.card(var))])


def finite_diff(net: Network, ev: Evidence | None, entry: Entry | Sequence[Entry], h: float = 1e-5) -> float:
    """Central difference of P(evidence) in one entry (no row renormalization).

    With several entries, the mixed derivative is taken as the central
    difference in the last entry of the exact corner difference in the
    others.  A plain mixed central difference divides by ``(2h)**k`` and at
    ``h = 1e-5`` its round-off already exceeds 1e-5 relative; P(evidence) is
    multilinear, so the corner difference loses nothing.
    """
    if h <= 0:
        raise OracleError("h must be positive")
    _guard(net)
    ev = ev or Evidence()
    entries = [entry] if isinstance(entry, (ThetaEntry, FEntry)) else list(entry)
    if len(set(entries)) != len(entries):
        raise OracleError("repeated entry in a mixed difference")
    *exact, last = entries
    if isinstance(last, ThetaEntry):
        base = net.cpds[last.var].table[tuple(last.parent_config) + (last.state,)]
    else:
        base = _evidence_functions(net, ev)[last.var][last.state]
    total = 0.0
    for corner in itertools.product((0.0, 1.0), repeat=len(exact)):
        sign = (-1) ** (len(exact) - int(sum(corner)))
        fixed = dict(zip(exact, corner))
        up = _substituted(net, ev, {**fixed, last: base + h})
        down = _substituted(net, ev, {**fixed, last: base - h})
        total += sign * (up - down)
    return total / (2 * h)


def sum_product(
    net: Network,
    ev: Evidence | None,
    cpd_vars: Iterable[int],
    out_vars: Sequence[int],
    finding_vars: Iterable[int] | None = None,
) -> np.ndarray:
    """Sum over everything but ``out_vars`` of a chosen sub-product.

    The product covers the CPDs of ``cpd_vars`` and the evidence functions of
    ``finding_vars`` (default: all findings on variables in the product's
    domain).  Only variables in that domain or in ``out_vars`` are enumerated,
    so variables foreign to the sub-product are not summed.
    """
    ev = ev or Evidence()
    cpd_vars = sorted(set(cpd_vars))
    dom = set(out_vars)
    for v in cpd_vars:
        dom |= net.family(v)
    if finding_vars is None:
        finding_vars = [v for v in ev if v in dom]
    finding_vars = sorted(set(finding_vars))
    dom |= set(finding_vars)
    dom = sorted(dom)
    _guard(net, dom)
    pos = {v: i for i, v in enumerate(dom)}
    shape = [net.card(v) for v in dom]
    acc = np.ones(shape)
    for v in cpd_vars:
        axes = list(net.parents(v)) + [v]
        t = np.transpose(net.cpds[v].table, np.argsort([pos[a] for a in axes]))
        full = [1] * len(dom)
        for a in axes:
            full[pos[a]] = shape[pos[a]]
        acc = acc * t.reshape(full)
    for v in finding_vars:
        f = np.zeros(net.card(v))
        f[ev[v]] = 1.0
        full = [1] * len(dom)
        full[pos[v]] = net.card(v)
        acc = acc * f.reshape(full)
    out = list(out_vars)
    acc = acc.sum(axis=tuple(i for i, v in enumerate(dom) if v not in out))
    kept = [v for v in dom if v in out]
    return np.transpose(acc, [kept.index(v) for v in out])
