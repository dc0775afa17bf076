"""Finite-field arithmetic, q-ary index expansions and the zero-padded
message/auxiliary embedding shared by codewords and linear combinations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# irreducible polynomials, low-degree coefficient first (monic, leading term omitted)
_IRREDUCIBLE = {
    4: (2, [1, 1]),  # x^2 + x + 1
    8: (2, [1, 1, 0]),  # x^3 + x + 1
    9: (3, [1, 0]),  # x^2 + 1
    16: (2, [1, 1, 0, 0]),  # x^4 + x + 1
}


def is_prime(n: int) -> bool:
    """Deterministic trial division."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    for d in range(3, r + 1, 2):
        if n % d == 0:
            return False
    return True


def _poly_tables(p: int, coeffs: list[int]):
    m = len(coeffs)
    q = p**m

    def digits(x):
        return [(x // p**i) % p for i in range(m)]

    def label(d):
        return sum(int(c) * p**i for i, c in enumerate(d))

    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        da = digits(a)
        for b in range(q):
            db = digits(b)
            add[a, b] = label([(x + y) % p for x, y in zip(da, db)])
            prod = [0] * (2 * m - 1)
            for i, x in enumerate(da):
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % p
            # reduce x^m = -(coeffs . x^i)
            for deg in range(2 * m - 2, m - 1, -1):
                c = prod[deg]
                if c:
                    prod[deg] = 0
                    for i, r in enumerate(coeffs):
                        prod[deg - m + i] = (prod[deg - m + i] - c * r) % p
            mul[a, b] = label(prod[:m])
    return add, mul


@dataclass(frozen=True, eq=False)
class FiniteField:
    """Field of order ``q`` backed by dense operation tables.

    Elements are integer labels ``0..q-1``. For prime ``q`` the labels are
    residues and arithmetic is ordinary modular arithmetic. For the
    prime-power orders 4, 8, 9 and 16 a label encodes polynomial
    coefficients in base ``p``, lowest degree in the least significant digit.
    """

    q: int
    p: int
    add_table: np.ndarray = field(repr=False)
    mul_table: np.ndarray = field(repr=False)
    neg_table: np.ndarray = field(repr=False)
    inv_table: np.ndarray = field(repr=False)

    @property
    def is_prime(self) -> bool:
        return self.p == self.q

    def add(self, a, b):
        return self.add_table[np.asarray(a), np.asarray(b)]

    def sub(self, a, b):
        return self.add_table[np.asarray(a), self.neg_table[np.asarray(b)]]

    def mul(self, a, b):
        return self.mul_table[np.asarray(a), np.asarray(b)]

    def neg(self, a):
        return self.neg_table[np.asarray(a)]

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return self.inv_table[a]

    def signed(self, a):
        """Signed residue view in ``{-(q-1)/2, ..., (q-1)/2}`` (odd prime ``q``)."""
        if not self.is_prime or self.q == 2:
            raise ValueError(f"signed residues need an odd prime order, got {self.q}")
        a = np.asarray(a)
        h = (self.q - 1) // 2
        return np.where(a > h, a - self.q, a)

    def from_int(self, x):
        """Reduce integers into the field (prime ``q`` only)."""
        if not self.is_prime:
            raise ValueError("integer reduction is only defined for prime order")
        return np.mod(np.asarray(x, dtype=np.int64), self.q)

    def dot(self, A, B):
        """Matrix product over the field."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.is_prime:
            return (A @ B) % self.q
        A2 = np.atleast_2d(A)
        B2 = B if B.ndim == 2 else B[:, None]
        out = np.zeros((A2.shape[0], B2.shape[1]), dtype=np.int64)
        for i in range(A2.shape[1]):
            out = self.add_table[out, self.mul_table[A2[:, i][:, None], B2[i][None, :]]]
        if A.ndim == 1:
            out = out[0]
        if B.ndim == 1:
            out = out[..., 0] if A.ndim == 1 else out[:, 0]
        return out

    def combine(self, coeffs, vectors):
        """Field linear combination ``sum_k coeffs[k] * vectors[k]``."""
        acc = np.zeros_like(np.asarray(vectors[0]), dtype=np.int64)
        for c, v in zip(coeffs, vectors):
            acc = self.add(acc, self.mul(int(c) % self.q if self.is_prime else int(c), v))
        return acc


_CACHE: dict[int, FiniteField] = {}


def field_new(q: int) -> FiniteField:
    """Return the finite field of order ``q``.

    Supported orders are all primes and the prime powers 4, 8, 9 and 16.

    Raises
    ------
    ValueError
        If ``q`` is not a supported field order.
    """
    q = int(q)
    if q in _CACHE:
        return _CACHE[q]
    if is_prime(q):
        r = np.arange(q)
        add = (r[:, None] + r[None, :]) % q
        mul = (r[:, None] * r[None, :]) % q
        p = q
    elif q in _IRREDUCIBLE:
        p, coeffs = _IRREDUCIBLE[q]
        add, mul = _poly_tables(p, coeffs)
    else:
        raise ValueError(f"{q} is not a field order supported here (primes and 4, 8, 9, 16)")
    neg = np.array([int(np.flatnonzero(add[a] == 0)[0]) for a in range(q)])
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = int(np.flatnonzero(mul[a] == 1)[0])
    for t in (add, mul, neg, inv):
        t.setflags(write=False)
    f = FiniteField(q, p, add, mul, neg, inv)
    _CACHE[q] = f
    return f


def qary_expand(m: int, length: int, f: FiniteField | int) -> np.ndarray:
    """Most-significant-digit-first base-q expansion of ``m``."""
    q = f.q if isinstance(f, FiniteField) else int(f)
    m = int(m)
    if m < 0 or m >= q**length:
        raise OverflowError(f"index {m} does not fit in {length} base-{q} digits")
    out = np.zeros(length, dtype=np.int64)
    for i in range(length - 1, -1, -1):
        m, out[i] = divmod(m, q)
    return out


def recompose(digits, f: FiniteField | int) -> int:
    """Inverse of :func:`qary_expand`."""
    q = f.q if isinstance(f, FiniteField) else int(f)
    m = 0
    for d in np.asarray(digits).tolist():
        m = m * q + int(d)
    return m


def digit_count(nbits: float, q: int, tol: float = 1e-9) -> int:
    """``nbits / log2 q`` as an integer, or raise if it is not integral."""
    x = nbits / math.log2(q)
    k = round(x)
    if abs(x - k) > tol:
        raise ValueError(f"{nbits} bits is not an integral number of base-{q} digits")
    return int(k)


@dataclass(frozen=True)
class IndexEmbedding:
    """Digit layout of ``eta(m, l) = [nu(m), nu(l), 0...]`` for each user.

    Parameters
    ----------
    msg_digits, aux_digits : tuple of int
        Number of base-q digits of the message and auxiliary index per user.
    q : int
        Field order.
    """

    msg_digits: tuple
    aux_digits: tuple
    q: int

    def __post_init__(self):
        if len(self.msg_digits) != len(self.aux_digits):
            raise ValueError("per-user digit lists differ in length")
        if min(self.msg_digits + self.aux_digits, default=0) < 0:
            raise ValueError("digit counts must be nonnegative")

    @classmethod
    def from_rates(cls, n: int, rates, aux_rates, q: int) -> "IndexEmbedding":
        return cls(
            tuple(digit_count(n * r, q) for r in rates),
            tuple(digit_count(n * r, q) for r in aux_rates),
            int(q),
        )

    @property
    def K(self) -> int:
        return len(self.msg_digits)

    @property
    def kappa(self) -> int:
        return max(m + l for m, l in zip(self.msg_digits, self.aux_digits))

    def pad_len(self, k: int) -> int:
        return self.kappa - self.msg_digits[k] - self.aux_digits[k]

    def n_messages(self, k: int) -> int:
        return self.q ** self.msg_digits[k]

    def n_aux(self, k: int) -> int:
        return self.q ** self.aux_digits[k]


def eta(m: int, l: int, user: int, layout: IndexEmbedding) -> np.ndarray:
    """Embedding ``[nu(m), nu(l), 0-pad]`` of length ``kappa``."""
    nm, nl = layout.msg_digits[user], layout.aux_digits[user]
    return np.concatenate(
        [
            qary_expand(m, nm, layout.q),
            qary_expand(l, nl, layout.q),
            np.zeros(layout.pad_len(user), dtype=np.int64),
        ]
    )


def eta_all(user: int, layout: IndexEmbedding) -> np.ndarray:
    """All embeddings of ``user`` stacked, row ``m * n_aux + l``."""
    nm, nl = layout.msg_digits[user], layout.aux_digits[user]
    tot = nm + nl
    idx = np.arange(layout.q**tot)
    powers = layout.q ** np.arange(tot - 1, -1, -1)
    dig = (idx[:, None] // powers[None, :]) % layout.q
    pad = np.zeros((len(idx), layout.pad_len(user)), dtype=np.int64)
    return np.concatenate([dig, pad], axis=1)


def rank_over_field(M, f: FiniteField) -> int:
    """Rank by Gaussian elimination over ``f``."""
    A = np.array(M, dtype=np.int64, copy=True)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("rank needs a nonempty 2-d matrix")
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        piv = np.flatnonzero(A[r:, c])
        if piv.size == 0:
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        A[r] = f.mul(f.inv(A[r, c]), A[r])
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = f.sub(A[i], f.mul(A[i, c], A[r]))
        r += 1
        if r == rows:
            break
    return r
