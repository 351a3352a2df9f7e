"""Exhaustive search over sensor subsets; ground truth for tiny instances."""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .estimation import aopt_objective
from .exceptions import (
    EnumerationTooLargeError,
    InfeasibleBudgetError,
    SingularFIMError,
)
from .rom import NoiseModel, ReducedOrderModel

MAX_SUBSETS = 10**6


def exhaustive_best(
    rom: ReducedOrderModel,
    noise: NoiseModel | None,
    p: int,
) -> tuple[np.ndarray, float]:
    """Globally best p-subset by A-optimality, ties to the lexicographically first.

    Subsets whose Fisher information is singular are skipped; if every
    subset is singular the error propagates.  Enumeration is refused when
    the subset count exceeds ``MAX_SUBSETS``.
    """
    n, r1 = rom.n, rom.r1
    if p < r1 or p > n:
        raise InfeasibleBudgetError(f"p={p} must satisfy r1={r1} <= p <= n={n}")
    total = comb(n, p)
    if total > MAX_SUBSETS:
        raise EnumerationTooLargeError(
            f"C({n}, {p}) = {total} subsets exceeds the limit of {MAX_SUBSETS}"
        )
    best_subset = None
    best_value = np.inf
    for subset in itertools.combinations(range(n), p):
        try:
            value = aopt_objective(rom, noise, subset)
        except SingularFIMError:
            continue
        if value < best_value:
            best_value = value
            best_subset = subset
    if best_subset is None:
        raise SingularFIMError(
            f"every {p}-subset of {n} candidates has a singular Fisher information"
        )
    return np.array(best_subset, dtype=np.int64), float(best_value)
