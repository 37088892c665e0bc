"""Expectations over independent uniform angles in [0, 2pi).

An equispaced rule with ``N`` nodes integrates every trigonometric
polynomial of degree ``<= N - 1`` exactly, so a tensor grid with
``N = degree + 1`` nodes per parameter turns the expectation of ``f``,
``f**2`` or ``(df)**2`` (all degree <= 4 per parameter) into a finite sum.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

DEFAULT_BUDGET = 10**7
CHUNK_ROWS = 8192

BatchFn = Callable[[np.ndarray], np.ndarray]


class BudgetExceeded(ValueError):
    """Raised when an exact grid would need more evaluations than allowed."""


@dataclass(frozen=True)
class ExpectationReport:
    mean: float
    stderr: float
    mode: str  # "exact-grid" or "monte-carlo"
    samples: int
    seed: int | None = None

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")
        if self.mode == "exact-grid" and self.stderr != 0:
            raise ValueError("exact reports carry zero stderr")

    def to_dict(self) -> dict:
        return asdict(self)


def grid_nodes(n_nodes: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_nodes) / n_nodes


def grid_size(n_params: int, max_trig_degree: int) -> int:
    return (max_trig_degree + 1) ** n_params


def exact_param_expectation(
    fn: BatchFn,
    n_params: int,
    max_trig_degree: int = 4,
    budget: int = DEFAULT_BUDGET,
    chunk: int = CHUNK_ROWS,
) -> ExpectationReport:
    """Exact mean of ``fn`` over uniform angles via the tensor equispaced grid.

    ``fn`` maps an ``(m, n_params)`` array of angles to ``m`` values.  Grid
    points are visited in a fixed order and reduced chunk by chunk with
    ``math.fsum`` so the result does not depend on chunking.
    """
    nodes_per_axis = max_trig_degree + 1
    total = grid_size(n_params, max_trig_degree)
    if total > budget:
        raise BudgetExceeded(
            f"exact grid needs {nodes_per_axis}^{n_params} = {total} evaluations "
            f"(budget {budget}); use Monte Carlo instead"
        )
    nodes = grid_nodes(nodes_per_axis)
    if n_params == 0:
        value = float(np.asarray(fn(np.zeros((1, 0))))[0])
        return ExpectationReport(value, 0.0, "exact-grid", 1)
    powers = nodes_per_axis ** np.arange(n_params - 1, -1, -1)
    partial = []
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        digits = (flat[:, None] // powers) % nodes_per_axis
        partial.append(math.fsum(np.asarray(fn(nodes[digits]), dtype=float)))
    return ExpectationReport(math.fsum(partial) / total, 0.0, "exact-grid", total)


def mc_param_expectation(
    fn: BatchFn,
    n_params: int,
    samples: int,
    rng: np.random.Generator | int | None = None,
    chunk: int = CHUNK_ROWS,
) -> ExpectationReport:
    """Monte Carlo mean with standard error ``std / sqrt(samples)``."""
    if samples < 2:
        raise ValueError("need at least two samples")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    thetas = rng.uniform(0.0, 2 * np.pi, size=(samples, n_params))
    values = np.concatenate([
        np.asarray(fn(thetas[i:i + chunk]), dtype=float) for i in range(0, samples, chunk)
    ])
    stderr = float(values.std(ddof=1) / math.sqrt(samples))
    return ExpectationReport(float(values.mean()), stderr, "monte-carlo", samples, seed)
