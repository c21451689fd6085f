"""Contention-based relay selection with hybrid-ARQ.

Closed-form two-slot throughput approximations, grid optimizers, an exact
selection-probability oracle, and a Monte Carlo simulator of the full
protocol episode.
"""

from .kernel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
