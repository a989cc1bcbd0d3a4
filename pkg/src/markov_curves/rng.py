"""Seeded 64-bit linear congruential generator for reproducible suites.

The point of carrying our own generator instead of numpy's is wire
compatibility: any implementation in any language that follows the
multiplier/increment pair below reproduces the exact same polynomial
test suites bit for bit.
"""

from __future__ import annotations

import numpy as np

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    """state <- state * MULTIPLIER + INCREMENT (mod 2**64)."""

    def __init__(self, seed=0):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state * MULTIPLIER + INCREMENT) & _MASK
        return self.state

    def uniform(self):
        """Uniform float in [-1, 1) with 53 significant bits."""
        return (self.next_u64() >> 11) / float(1 << 53) * 2.0 - 1.0

    def coefficients(self, count):
        return np.array([self.uniform() for _ in range(count)])


def random_polynomial(lcg, max_degree):
    """Monomial coefficients (constant first) of length max_degree + 1."""
    return lcg.coefficients(max_degree + 1)


def random_bivariate(lcg, max_degree):
    """Dict of 2-D multi-indices (graded order) to uniform coefficients."""
    coefficients = {}
    for total in range(max_degree + 1):
        for first in range(total, -1, -1):
            coefficients[(first, total - first)] = lcg.uniform()
    return coefficients
