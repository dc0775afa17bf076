"""Embedding bounded-integer linear combinations into a prime field."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .gf import FiniteField, field_new, is_prime


@dataclass(frozen=True)
class TranslationPlan:
    """Prime field large enough that integer and field combinations agree.

    Attributes
    ----------
    q : int
        The chosen prime.
    Gamma : int
        Largest absolute auxiliary value.
    coeff_bound : int
        Largest absolute coefficient.
    K : int
        Number of users.
    """

    q: int
    Gamma: int
    coeff_bound: int
    K: int

    @property
    def field(self) -> FiniteField:
        return field_new(self.q)

    @property
    def limit(self) -> int:
        return math.isqrt((self.q - 1) // (2 * self.K))

    def to_field(self, x):
        """Integers to residues ``[x] mod q``."""
        return np.mod(np.asarray(x, dtype=np.int64), self.q)

    def to_int(self, r):
        """Residues back to the signed view."""
        return self.field.signed(r)


def _coeff_rows(coeffs) -> np.ndarray:
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.int64))
    return c


def _bounds(coeffs, alphabets) -> tuple[int, int]:
    if any(len(a) == 0 for a in alphabets):
        raise ValueError("empty alphabet")
    gamma = max(int(np.max(np.abs(np.asarray(a, dtype=np.int64)))) for a in alphabets)
    c = _coeff_rows(coeffs)
    cb = int(np.max(np.abs(c))) if c.size else 0
    return gamma, cb


def min_prime_q(coeffs, alphabets, K: int | None = None) -> TranslationPlan:
    """Smallest odd prime with ``max(|a|, Gamma) <= floor(sqrt((q-1)/(2K)))``.

    Parameters
    ----------
    coeffs : array_like
        Coefficient vector or matrix (rows are combinations).
    alphabets : sequence of sequences of int
        Auxiliary alphabet of each user.
    K : int, optional
        Number of users; defaults to ``len(alphabets)``.
    """
    K = len(alphabets) if K is None else int(K)
    gamma, cb = _bounds(coeffs, alphabets)
    m = max(gamma, cb)
    q = max(3, 2 * K * m * m + 1)
    while not (is_prime(q) and math.isqrt((q - 1) // (2 * K)) >= m):
        q += 1
    return TranslationPlan(q, gamma, cb, K)


def plan_for(q: int, coeffs, alphabets, K: int | None = None) -> TranslationPlan:
    """Plan at a caller-chosen prime; must satisfy the same sufficient condition."""
    K = len(alphabets) if K is None else int(K)
    gamma, cb = _bounds(coeffs, alphabets)
    if not is_prime(q) or q == 2:
        raise ValueError(f"{q} is not an odd prime")
    if math.isqrt((q - 1) // (2 * K)) < max(gamma, cb):
        raise ValueError(f"q={q} is below the translation bound")
    return TranslationPlan(q, gamma, cb, K)


def verify_translation(plan: TranslationPlan, coeffs, alphabets) -> bool:
    """Exhaustively compare integer sums with field sums read as signed residues."""
    f = field_new(plan.q)
    rows = _coeff_rows(coeffs)
    for u in itertools.product(*[list(a) for a in alphabets]):
        u = np.asarray(u, dtype=np.int64)
        for a in rows:
            s = int(np.dot(a, u))
            w = f.combine(plan.to_field(a), [plan.to_field(x) for x in u])
            if int(f.signed(w)) != s:
                return False
    return True
