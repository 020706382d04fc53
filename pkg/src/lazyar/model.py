"""Discrete Bayesian networks, hard evidence and their JSON file formats.

Network file::

    {"variables": [{"name": "X", "states": ["x0", "x1"]}, ...],
     "cpds": [{"child": "Y", "parents": ["X"], "table": [0.9, 0.1, 0.2, 0.8]}, ...]}

CPT rows iterate parent configurations row-major in the listed parent order
(leftmost parent slowest) with the child state innermost.

Evidence file: ``{"<variable>": "<state>", ...}``.
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Sequence

import numpy as np

from .factors import Factor

__all__ = [
    "ModelError",
    "ParseError",
    "ValidationError",
    "Variable",
    "Cpd",
    "Network",
    "Evidence",
    "parse_network",
    "serialize_network",
    "parse_evidence",
    "serialize_evidence",
    "evidence_indicator",
]

ROW_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Base class for invalid networks or evidence."""


class ParseError(ModelError):
    """Malformed input text."""


class ValidationError(ModelError):
    """Well-formed input violating a model invariant."""


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    states: tuple[str, ...]

    @property
    def card(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class Cpd:
    """P(child | parents); ``table`` has shape ``parent cards + (child card,)``."""

    child: int
    parents: tuple[int, ...]
    table: np.ndarray


class Network:
    """A validated DAG of discrete variables with one CPD per variable."""

    def __init__(self, variables: Sequence[Variable], cpds: Iterable[Cpd]):
        self.variables = tuple(variables)
        for i, v in enumerate(self.variables):
            if v.id != i:
                raise ValidationError(f"variable {v.name!r} has id {v.id}, expected {i}")
            if v.card < 1:
                raise ValidationError(f"variable {v.name!r} has no states")
            if len(set(v.states)) != v.card:
                raise ValidationError(f"duplicate state labels in {v.name!r}")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError("variable names are not unique")
        self._index = {v.name: v.id for v in self.variables}

        by_child: dict[int, Cpd] = {}
        for cpd in cpds:
            if cpd.child in by_child:
                raise ValidationError(f"two CPDs for {self.name(cpd.child)!r}")
            self._validate_cpd(cpd)
            by_child[cpd.child] = cpd
        missing = [v.name for v in self.variables if v.id not in by_child]
        if missing:
            raise ValidationError(f"no CPD for {missing}")
        self.cpds = tuple(by_child[i] for i in range(len(self.variables)))
        self.children: dict[int, list[int]] = {v.id: [] for v in self.variables}
        for cpd in self.cpds:
            for p in cpd.parents:
                self.children[p].append(cpd.child)
        self.topological_order = self._toposort()

    def _validate_cpd(self, cpd: Cpd) -> None:
        n = len(self.variables)
        name = self.name(cpd.child) if 0 <= cpd.child < n else cpd.child
        if not 0 <= cpd.child < n:
            raise ValidationError(f"CPD for unknown variable {cpd.child}")
        for p in cpd.parents:
            if not 0 <= p < n:
                raise ValidationError(f"unknown parent {p} in CPD of {name!r}")
        if len(set(cpd.parents)) != len(cpd.parents):
            raise ValidationError(f"duplicate parents in CPD of {name!r}")
        if cpd.child in cpd.parents:
            raise ValidationError(f"{name!r} is its own parent")
        shape = tuple(self.card(p) for p in cpd.parents) + (self.card(cpd.child),)
        if cpd.table.shape != shape:
            raise ValidationError(
                f"CPD of {name!r} has shape {cpd.table.shape}, expected {shape}"
            )
        if np.any(cpd.table < 0) or not np.all(np.isfinite(cpd.table)):
            raise ValidationError(f"CPD of {name!r} has negative or non-finite entries")
        sums = cpd.table.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise ValidationError(
                f"CPD of {name!r} has a row summing to {sums.flat[np.argmax(np.abs(sums - 1.0))]!r}"
            )

    def _toposort(self) -> tuple[int, ...]:
        indeg = {v.id: len(self.cpds[v.id].parents) for v in self.variables}
        ready = sorted(v for v, d in indeg.items() if d == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in self.children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        if len(order) != len(self.variables):
            cyclic = sorted(self.name(v) for v, d in indeg.items() if d > 0)
            raise ValidationError(f"the network contains a cycle through {cyclic}")
        return tuple(order)

    def __len__(self):
        return len(self.variables)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.variables == other.variables and all(
            a.child == b.child and a.parents == b.parents and np.array_equal(a.table, b.table)
            for a, b in zip(self.cpds, other.cpds)
        )

    __hash__ = object.__hash__

    def id(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def name(self, var: int) -> str:
        return self.variables[var].name

    def card(self, var: int) -> int:
        return self.variables[var].card

    def parents(self, var: int) -> tuple[int, ...]:
        return self.cpds[var].parents

    def family(self, var: int) -> frozenset:
        return frozenset(self.cpds[var].parents) | {var}

    @property
    def cards(self) -> dict[int, int]:
        return {v.id: v.card for v in self.variables}

    def cpd_factor(self, var: int) -> Factor:
        """A fresh :class:`Factor` phi(X | pa(X)) holding the CPT of ``var``."""
        cpd = self.cpds[var]
        return Factor(
            (var,),
            cpd.parents,
            cpd.table,
            origin=f"cpd:{var}",
            lineage=frozenset({var}),
            order=cpd.parents + (var,),
        )


class Evidence(Mapping):
    """Hard findings: an immutable map from variable id to observed state index."""

    def __init__(self, findings: Mapping[int, int] | None = None):
        self._findings = MappingProxyType(dict(findings or {}))

    @classmethod
    def validated(cls, net: Network, findings: Mapping[int, int]) -> "Evidence":
        for var, state in findings.items():
            if not 0 <= var < len(net):
                raise ModelError(f"unknown variable {var}")
            if not 0 <= state < net.card(var):
                raise ModelError(
                    f"state {state} out of range for {net.name(var)!r} (card {net.card(var)})"
                )
        return cls(findings)

    def __getitem__(self, var):
        return self._findings[var]

    def __iter__(self):
        return iter(self._findings)

    def __len__(self):
        return len(self._findings)

    def __repr__(self):
        return f"Evidence({dict(self._findings)!r})"

    def __hash__(self):
        return hash(frozenset(self._findings.items()))

    @property
    def observed(self) -> frozenset:
        return frozenset(self._findings)

    def without(self, vars: Iterable[int]) -> "Evidence":
        drop = set(vars)
        return Evidence({v: s for v, s in self._findings.items() if v not in drop})


def evidence_indicator(x: int, state: int, card: int) -> Factor:
    """The 0/1 evidence function of ``x = state``, as a head-less factor over ``x``."""
    if not 0 <= state < card:
        raise ModelError(f"state {state} out of range for cardinality {card}")
    table = np.zeros(card)
    table[state] = 1.0
    return Factor((), (x,), table, origin=f"evidence:{x}")


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_network(text: str) -> Network:
    doc = _loads(text)
    if not isinstance(doc, dict) or "variables" not in doc or "cpds" not in doc:
        raise ParseError("expected an object with 'variables' and 'cpds'")
    variables = []
    for i, entry in enumerate(doc["variables"]):
        try:
            name, states = entry["name"], entry["states"]
        except (KeyError, TypeError):
            raise ParseError(f"variable #{i} needs 'name' and 'states'") from None
        if not isinstance(name, str) or not isinstance(states, list):
            raise ParseError(f"variable #{i}: bad 'name' or 'states'")
        variables.append(Variable(i, name, tuple(str(s) for s in states)))
    index = {v.name: v.id for v in variables}
    if len(index) != len(variables):
        raise ValidationError("variable names are not unique")

    def lookup(name, where):
        if name not in index:
            raise ValidationError(f"unknown variable {name!r} in {where}")
        return index[name]

    cpds = []
    for i, entry in enumerate(doc["cpds"]):
        if not isinstance(entry, dict) or "child" not in entry or "table" not in entry:
            raise ParseError(f"cpd #{i} needs 'child' and 'table'")
        if any(k in entry for k in ("likelihood", "soft")):
            raise ValidationError("soft evidence is not supported")
        child = lookup(entry["child"], f"cpd #{i}")
        parents = tuple(lookup(p, f"parents of {entry['child']!r}") for p in entry.get("parents", []))
        try:
            flat = np.asarray(entry["table"], dtype=float)
        except (TypeError, ValueError):
            raise ParseError(f"cpd #{i}: table is not a list of numbers") from None
        shape = tuple(variables[p].card for p in parents) + (variables[child].card,)
        if flat.ndim != 1 or flat.size != int(np.prod(shape)):
            raise ValidationError(
                f"CPD of {entry['child']!r} has {flat.size} entries, expected {int(np.prod(shape))}"
            )
        cpds.append(Cpd(child, parents, flat.reshape(shape)))
    return Network(variables, cpds)


def serialize_network(net: Network) -> str:
    doc = {
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "cpds": [
            {
                "child": net.name(c.child),
                "parents": [net.name(p) for p in c.parents],
                "table": [float(x) for x in c.table.ravel()],
            }
            for c in net.cpds
        ],
    }
    return json.dumps(doc, indent=1)


def parse_evidence(text: str, net: Network) -> Evidence:
    # object_pairs_hook sees duplicate keys that json.loads would silently merge
    def pairs(items):
        seen = {}
        for k, v in items:
            if k in seen:
                raise ModelError(f"duplicate finding for {k!r}")
            seen[k] = v
        return seen

    try:
        doc = json.loads(text, object_pairs_hook=pairs)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("evidence must be an object mapping variables to states")
    findings = {}
    for name, state in doc.items():
        var = net.id(name)
        if not isinstance(state, str):
            raise ValidationError(f"finding for {name!r} must be a state label (hard evidence only)")
        states = net.variables[var].states
        if state not in states:
            raise ModelError(f"unknown state {state!r} for {name!r}")
        findings[var] = states.index(state)
    return Evidence(findings)


def serialize_evidence(ev: Evidence, net: Network) -> str:
    return json.dumps({net.name(v): net.variables[v].states[s] for v, s in sorted(ev.items())})
