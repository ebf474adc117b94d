"""Exact evaluators for a linear language with memory effects.

Three interchangeable engines — a small-step abstract machine on terms, a
graph-rewriting engine on proof nets, and a multi-token machine walking a
fixed net — evaluate the same programs against pluggable memory backends
(integer registers, probabilistic registers, a quantum state vector) and
agree on convergence probabilities.
"""

__version__ = "0.1.0"
