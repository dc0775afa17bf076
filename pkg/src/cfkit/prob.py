"""Probability mass functions, information measures in bits, robust
typicality and mismatched-typicality thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TOL = 1e-12


def _validate(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        raise ValueError("empty probability tensor")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError("probabilities must be finite and nonnegative")
    s = a.sum()
    if abs(s - 1.0) > TOL:
        raise ValueError(f"probabilities sum to {s!r}, not 1")
    return a


class Pmf:
    """Pmf over ``{0, ..., size-1}``.

    Inputs that do not sum to one (within 1e-12) are rejected rather than
    renormalized.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        a = np.array(probs, dtype=float).ravel()
        self.probs = _validate(a)
        self.probs.setflags(write=False)

    @property
    def size(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self):
        return f"Pmf({self.probs.tolist()})"

    @classmethod
    def uniform(cls, q: int) -> "Pmf":
        return cls(np.full(q, 1.0 / q))

    @classmethod
    def bernoulli(cls, p: float) -> "Pmf":
        return cls([1.0 - p, p])

    def to_json(self) -> dict:
        return {"shape": [self.size], "probs": self.probs.tolist()}


class JointPmf:
    """Joint pmf tensor with optional axis labels."""

    __slots__ = ("probs", "labels")

    def __init__(self, probs, labels: Sequence[str] | None = None):
        a = np.array(probs, dtype=float)
        self.probs = _validate(a)
        self.probs.setflags(write=False)
        if labels is None:
            labels = [f"x{i}" for i in range(a.ndim)]
        if len(labels) != a.ndim:
            raise ValueError("one label per axis required")
        self.labels = tuple(labels)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def axis(self, a) -> int:
        if isinstance(a, str):
            return self.labels.index(a)
        a = int(a)
        if not 0 <= a < self.probs.ndim:
            raise ValueError(f"axis {a} out of range")
        return a

    def marginal(self, axes) -> np.ndarray:
        keep = [self.axis(a) for a in _as_list(axes)]
        drop = tuple(i for i in range(self.probs.ndim) if i not in keep)
        m = self.probs.sum(axis=drop)
        # reorder to the requested axis order
        order = np.argsort(np.argsort(keep))
        return np.transpose(m, order) if m.ndim > 1 else m

    def to_json(self) -> dict:
        return {"shape": list(self.probs.shape), "probs": self.probs.ravel().tolist(), "labels": list(self.labels)}

    @classmethod
    def from_json(cls, d: dict) -> "JointPmf":
        return cls(np.array(d["probs"], dtype=float).reshape(d["shape"]), d.get("labels"))


def _as_list(x):
    if isinstance(x, (list, tuple)):
        return list(x)
    return [x]


def _arr(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def entropy(p) -> float:
    """Shannon entropy in bits of a pmf or joint tensor (``0 log 0 = 0``)."""
    a = _arr(p).ravel()
    a = a[a > 0]
    return float(-(a * np.log2(a)).sum())


def kl_divergence(p, r) -> float:
    """``D(p || r)`` in bits; ``inf`` when ``p`` puts mass where ``r`` has none."""
    p, r = _arr(p).ravel(), _arr(r).ravel()
    if p.shape != r.shape:
        raise ValueError("pmfs live on different alphabets")
    s = p > 0
    if np.any(r[s] <= 0):
        return float("inf")
    return float(max(0.0, (p[s] * np.log2(p[s] / r[s])).sum()))


def _joint(j) -> JointPmf:
    return j if isinstance(j, JointPmf) else JointPmf(j)


def conditional_entropy(j, target, given) -> float:
    """``H(target | given)`` from a joint tensor."""
    j = _joint(j)
    t = [j.axis(a) for a in _as_list(target)]
    g = [j.axis(a) for a in _as_list(given)]
    if set(t) & set(g):
        raise ValueError("target and conditioning axes overlap")
    if not g:
        return entropy(j.marginal(t))
    return entropy(j.marginal(t + g)) - entropy(j.marginal(g))


def mutual_information(j, axes_a, axes_b) -> float:
    """``I(A; B)`` from a joint tensor, in bits."""
    j = _joint(j)
    a = [j.axis(x) for x in _as_list(axes_a)]
    b = [j.axis(x) for x in _as_list(axes_b)]
    if set(a) & set(b):
        raise ValueError("axis sets must be disjoint")
    val = entropy(j.marginal(a)) + entropy(j.marginal(b)) - entropy(j.marginal(a + b))
    return max(0.0, val)


def empirical_type(seq, size: int | None = None) -> np.ndarray:
    """Relative symbol frequencies of ``seq``."""
    s = np.asarray(seq, dtype=np.int64).ravel()
    if size is None:
        size = int(s.max()) + 1 if s.size else 0
    return np.bincount(s, minlength=size)[:size] / max(s.size, 1)


def is_typical(seq, p, eps: float) -> bool:
    """Robust typicality ``|pi(x) - p(x)| <= eps p(x)`` for every symbol.

    Multi-column input (shape ``(n, d)``) is treated as a sequence of tuple
    symbols against the joint tensor ``p``.
    """
    pa = _arr(p)
    s = np.asarray(seq, dtype=np.int64)
    if pa.ndim > 1:
        s = np.ravel_multi_index(tuple(s.T), pa.shape)
    flat = pa.ravel()
    if s.size and (s.min() < 0 or s.max() >= flat.size):
        return False
    pi = np.bincount(s.ravel(), minlength=flat.size) / max(s.size, 1)
    return bool(np.all(np.abs(pi - flat) <= eps * flat + 1e-15))


@dataclass(frozen=True)
class TypicalityParams:
    """Typicality slack for the encoder (``epsilon_prime``) and decoder (``epsilon``)."""

    epsilon: float = 0.2
    epsilon_prime: float = 0.1

    def __post_init__(self):
        if not 0 < self.epsilon_prime < self.epsilon < 1:
            raise ValueError("need 0 < epsilon_prime < epsilon < 1")


class Threshold(NamedTuple):
    """A rate threshold ``value`` and the side of it that suffices.

    ``sense`` is ``">"`` for covering (rates above suffice) and ``"<"`` for
    packing. The vanishing slack term is not included in ``value``.
    """

    value: float
    sense: str


def mismatched_exponent(j, tilde_p) -> float:
    """``I(X;Y) + D(p_X || tilde_p)`` where ``X`` is axis 0 of ``j``.

    Exponent of the probability that an i.i.d. ``tilde_p`` sequence is
    jointly typical with a typical ``y`` sequence.
    """
    j = _joint(j)
    rest = list(range(1, j.probs.ndim))
    px = j.marginal(0)
    d = kl_divergence(px, tilde_p)
    if not rest:
        return d
    return mutual_information(j, [0], rest) + d


def covering_threshold(j, tilde_p) -> Threshold:
    """Covering threshold ``I(X; Xhat) + D(p_Xhat || tilde_p)``; ``Xhat`` is axis 1."""
    j = _joint(j)
    val = mutual_information(j, [0], [1]) + kl_divergence(j.marginal(1), tilde_p)
    return Threshold(val, ">")


def packing_threshold(j, tilde_p) -> Threshold:
    """Packing threshold ``I(X; Y) + D(p_X || tilde_p)``; ``X`` is axis 0."""
    return Threshold(mismatched_exponent(j, tilde_p), "<")
