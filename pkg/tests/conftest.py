"""Shared fixtures: small hand-built networks and seeded random suites."""
import json

import numpy as np
import pytest

from lazyar.bench import random_evidence, random_network
from lazyar.model import Evidence, parse_network

TOY_TEXT = json.dumps(
    {
        "variables": [
            {"name": "X", "states": ["x0", "x1"]},
            {"name": "Y", "states": ["y0", "y1"]},
        ],
        "cpds": [
            {"child": "X", "parents": [], "table": [0.3, 0.7]},
            {"child": "Y", "parents": ["X"], "table": [0.9, 0.1, 0.2, 0.8]},
        ],
    }
)
TOY_EVIDENCE_TEXT = '{"Y": "y0"}'

CHAIN_TEXT = json.dumps(
    {
        "variables": [
            {"name": "X", "states": ["x0", "x1"]},
            {"name": "Y", "states": ["y0", "y1"]},
            {"name": "Z", "states": ["z0", "z1"]},
        ],
        "cpds": [
            {"child": "X", "parents": [], "table": [0.3, 0.7]},
            {"child": "Y", "parents": ["X"], "table": [0.9, 0.1, 0.2, 0.8]},
            {"child": "Z", "parents": ["Y"], "table": [0.6, 0.4, 0.25, 0.75]},
        ],
    }
)

# A -> C <- B, C -> D: one clique {A,B,C} feeding {C,D}.
COLLIDER_TEXT = json.dumps(
    {
        "variables": [
            {"name": "A", "states": ["a0", "a1"]},
            {"name": "B", "states": ["b0", "b1", "b2"]},
            {"name": "C", "states": ["c0", "c1"]},
            {"name": "D", "states": ["d0", "d1"]},
        ],
        "cpds": [
            {"child": "A", "parents": [], "table": [0.6, 0.4]},
            {"child": "B", "parents": [], "table": [0.2, 0.5, 0.3]},
            {
                "child": "C",
                "parents": ["A", "B"],
                "table": [0.9, 0.1, 0.7, 0.3, 0.4, 0.6, 0.5, 0.5, 0.2, 0.8, 0.05, 0.95],
            },
            {"child": "D", "parents": ["C"], "table": [0.8, 0.2, 0.3, 0.7]},
        ],
    }
)


@pytest.fixture
def toy():
    return parse_network(TOY_TEXT)


@pytest.fixture
def toy_evidence(toy):
    return Evidence({toy.id("Y"): 0})


@pytest.fixture
def chain():
    return parse_network(CHAIN_TEXT)


@pytest.fixture
def collider():
    return parse_network(COLLIDER_TEXT)


def random_case(seed, max_vars=10, max_card=3, max_parents=3, max_evidence=3, min_vars=2):
    """A seeded (network, evidence) pair with the evidence size clamped to the network."""
    rng = np.random.default_rng(seed)
    net = random_network(int(rng.integers(min_vars, max_vars + 1)), max_parents, max_card, rng)
    size = min(len(net), int(rng.integers(0, max_evidence + 1)))
    return net, random_evidence(net, size, rng), rng


@pytest.fixture
def write(tmp_path):
    """Write text to a file in a temporary directory and return its path."""

    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write
