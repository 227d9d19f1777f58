"""parley: a multi-issue human-vs-agent negotiation workbench.

Core pieces: a Bayesian opponent model rendered as actionable visual
guidance (horizon grid + convergence panel), a turn-based session engine
with scripted or LLM-backed landlords, a behavioral-metrics suite over
session logs, and a FastAPI service exposing it all to interactive clients.
"""

__version__ = "0.1.0"
