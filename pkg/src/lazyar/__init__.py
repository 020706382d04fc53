"""Exact inference in discrete Bayesian networks by lazy arc-reversal propagation.

Besides posteriors and P(evidence), a tree in equilibrium answers partial
derivatives of P(evidence) with respect to CPT entries, evidence functions and
message factors, joints over variable sets spanning several cliques, and, after
a cautious propagation, evidence-retraction queries.
"""
from .model import Evidence, Network, parse_evidence, parse_network, serialize_network
from .jointree import JunctionTree, compile_network
from .propagation import marginal, posterior_clique, prob_evidence, propagate
from .derivatives import DerivativeQuery, d_f, d_multi, d_separator, d_theta, parameter_posterior
from .varprop import joint_over
from .cautious import retractable_sets, retracted_derivative, retracted_prob

__version__ = "0.1.0"

__all__ = [
    "Evidence",
    "Network",
    "JunctionTree",
    "DerivativeQuery",
    "parse_network",
    "parse_evidence",
    "serialize_network",
    "compile_network",
    "propagate",
    "prob_evidence",
    "posterior_clique",
    "marginal",
    "d_theta",
    "d_f",
    "d_separator",
    "d_multi",
    "parameter_posterior",
    "joint_over",
    "retractable_sets",
    "retracted_prob",
    "retracted_derivative",
]
