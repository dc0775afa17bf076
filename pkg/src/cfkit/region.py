"""Achievable rate regions for compute-forward and the polytope algebra
(union, intersection, time-sharing hull, extremal rates) used to combine them.

A region is a finite union of convex pieces. Each piece is a list of
half-spaces ``coeffs . R < bound`` together with the implicit constraints
``R_k >= 0``. Membership is decided with a small closed margin.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError
from scipy.stats import norm

from . import channel as ch
from .gf import FiniteField, field_new, rank_over_field
from .prob import entropy
from .translate import TranslationPlan, min_prime_q, plan_for

MARGIN = 1e-9
_VTOL = 1e-9


def C(x):
    """Gaussian capacity ``0.5 log2(1 + x)``."""
    return 0.5 * np.log2(1.0 + np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# polytope algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Piece:
    """Convex piece ``{R >= 0 : A R < b}``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError("one bound per half-space")
        if A.size and np.any(np.all(A == 0, axis=1)):
            raise ValueError("half-space with all-zero coefficients")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, p, margin: float = MARGIN) -> bool:
        p = np.asarray(p, dtype=float)
        if np.any(p < 0):
            return False
        return bool(np.all(self.A @ (p + margin) <= self.b))

    @cached_property
    def _interior(self) -> float:
        # largest ball radius that fits (capped at 1)
        K = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        A_ub = np.vstack([np.hstack([self.A, norms[:, None]]), np.hstack([-np.eye(K), np.ones((K, 1))])])
        b_ub = np.concatenate([self.b, np.zeros(K)])
        c = np.zeros(K + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * K + [(None, 1.0)], method="highs")
        if res.status != 0:
            return -math.inf
        return float(res.x[-1])

    @property
    def is_empty(self) -> bool:
        return self._interior <= 1e-12

    def is_bounded(self) -> bool:
        for k in range(self.dim):
            c = np.zeros(self.dim)
            c[k] = -1.0
            res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(0, None)] * self.dim, method="highs")
            if res.status == 3:
                return False
        return True

    def vertices(self) -> np.ndarray:
        """Vertices of the closure (``K <= 3``); counter-clockwise for ``K = 2``."""
        K = self.dim
        if K > 3:
            raise ValueError("vertex enumeration is limited to K <= 3")
        if not self.is_bounded():
            raise ValueError("unbounded piece has no finite vertex description")
        A = np.vstack([self.A, -np.eye(K)])
        b = np.concatenate([self.b, np.zeros(K)])
        pts = []
        for rows in itertools.combinations(range(A.shape[0]), K):
            M = A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, b[list(rows)])
            if np.all(A @ x <= b + _VTOL * (1 + np.abs(b))):
                pts.append(np.where(np.abs(x) < 1e-14, 0.0, x))
        if not pts:
            return np.zeros((0, K))
        pts = _dedupe(np.array(pts))
        if K == 2 and len(pts) > 2:
            c = pts.mean(axis=0)
            ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
            pts = pts[np.argsort(ang)]
        return pts

    def max_linear(self, w) -> float:
        res = linprog(-np.asarray(w, dtype=float), A_ub=self.A, b_ub=self.b, bounds=[(0, None)] * self.dim, method="highs")
        if res.status == 3:
            return math.inf
        if res.status != 0:
            return 0.0
        return float(-res.fun)


def _dedupe(pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in pts:
        if not any(np.max(np.abs(p - o)) <= tol for o in out):
            out.append(p)
    return np.array(out)


class RateRegion:
    """Finite union of convex pieces in ``R_+^K``."""

    def __init__(self, dim: int, pieces: Sequence[Piece] = ()):
        self.dim = int(dim)
        ps = []
        for p in pieces:
            if p.dim != self.dim:
                raise ValueError("piece dimension mismatch")
            if not p.is_empty:
                ps.append(p)
        self.pieces = ps

    def __repr__(self):
        return f"RateRegion(dim={self.dim}, pieces={len(self.pieces)})"

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, p, margin: float = MARGIN) -> bool:
        if len(p) != self.dim:
            raise ValueError("point dimension mismatch")
        return any(pc.contains(p, margin) for pc in self.pieces)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "pieces": [
                {"halfspaces": [{"coeffs": a.tolist(), "bound": float(bb)} for a, bb in zip(p.A, p.b)]}
                for p in self.pieces
            ],
        }

    @classmethod
    def from_json(cls, d) -> "RateRegion":
        if isinstance(d, str):
            d = json.loads(d)
        dim = int(d["dim"])
        pieces = []
        for pc in d["pieces"]:
            hs = pc["halfspaces"]
            A = np.array([h["coeffs"] for h in hs], dtype=float).reshape(len(hs), dim)
            pieces.append(Piece(A, [h["bound"] for h in hs]))
        return cls(dim, pieces)


def polytope(dim: int, halfspaces) -> RateRegion:
    """Single-piece region from ``(coeffs, bound)`` pairs."""
    hs = list(halfspaces)
    if not hs:
        raise ValueError("at least one half-space is required")
    A = np.array([h[0] for h in hs], dtype=float).reshape(len(hs), dim)
    return RateRegion(dim, [Piece(A, [h[1] for h in hs])])


def box(bounds) -> RateRegion:
    """``{0 <= R_k < bounds[k]}``."""
    K = len(bounds)
    return polytope(K, [(np.eye(K)[k], bounds[k]) for k in range(K)])


def union(r1: RateRegion, r2: RateRegion) -> RateRegion:
    if r1.dim != r2.dim:
        raise ValueError("dimension mismatch")
    return RateRegion(r1.dim, r1.pieces + r2.pieces)


def intersect(r1: RateRegion, r2: RateRegion) -> RateRegion:
    """Pairwise intersection of pieces."""
    if r1.dim != r2.dim:
        raise ValueError("dimension mismatch")
    out = []
    for p, s in itertools.product(r1.pieces, r2.pieces):
        out.append(Piece(np.vstack([p.A, s.A]), np.concatenate([p.b, s.b])))
    return RateRegion(r1.dim, out)


def max_sum_rate(r: RateRegion) -> float:
    """Supremum of ``R_1 + ... + R_K`` over the region (0 when empty)."""
    if r.is_empty:
        return 0.0
    return max(p.max_linear(np.ones(r.dim)) for p in r.pieces)


def max_symmetric_rate(r: RateRegion) -> float:
    """Largest ``t`` with ``(t, ..., t)`` in the closure of the region."""
    best = 0.0
    for p in r.pieces:
        s = p.A.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(s > 0, p.b / np.where(s > 0, s, 1.0), np.inf)
        if np.all(p.b[s <= 0] >= 0):
            best = max(best, float(np.min(t)))
    return best


def _union_polygon(r: RateRegion):
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    polys = []
    for p in r.pieces:
        v = p.vertices()
        if len(v) >= 3:
            polys.append(Polygon(v))
    if not polys:
        return None
    return unary_union(polys)


def _drop_collinear(pts: np.ndarray) -> np.ndarray:
    keep = True
    pts = list(pts)
    while keep and len(pts) > 3:
        keep = False
        for i in range(len(pts)):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if abs(cross) < 1e-12 or np.max(np.abs(a - b)) < 1e-12:
                del pts[i]
                keep = True
                break
    return np.array(pts)


def vertices(r: RateRegion) -> np.ndarray:
    """Vertices of the closure of the region.

    For ``K = 2`` this is the boundary of the union, counter-clockwise from
    the origin. For ``K = 3`` it is every piece vertex not interior to another
    piece, sorted lexicographically.
    """
    if r.is_empty:
        return np.zeros((0, r.dim))
    if r.dim == 2:
        u = _union_polygon(r)
        if u is None or u.is_empty:
            return np.zeros((0, 2))
        geoms = getattr(u, "geoms", [u])
        pts = []
        for g in geoms:
            ring = np.asarray(g.exterior.coords)[:-1]
            if not g.exterior.is_ccw:
                ring = ring[::-1]
            pts.extend(_drop_collinear(ring))
        pts = np.array(pts)
        start = int(np.argmin(pts[:, 0] + pts[:, 1]))
        return np.roll(pts, -start, axis=0)
    if r.dim == 3:
        out = []
        for i, p in enumerate(r.pieces):
            for v in p.vertices():
                inside = any(
                    j != i and np.all(q.A @ v < q.b - 1e-9) and np.all(v > 1e-9) for j, q in enumerate(r.pieces)
                )
                if not inside:
                    out.append(v)
        pts = _dedupe(np.array(out))
        return pts[np.lexsort(pts.T[::-1])]
    raise ValueError("vertex enumeration is limited to K <= 3")


def convex_hull(r: RateRegion) -> RateRegion:
    """Time-sharing closure: convex hull of all piece vertices (``K <= 3``)."""
    if r.is_empty:
        return RateRegion(r.dim)
    if r.dim > 3:
        raise ValueError("convex hull is limited to K <= 3")
    pts = np.vstack([p.vertices() for p in r.pieces] + [np.zeros((1, r.dim))])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return RateRegion(r.dim)
    A, b = [], []
    for eq in hull.equations:
        n, off = eq[:-1], eq[-1]
        # drop the implicit coordinate planes
        if abs(off) < 1e-12 and np.sum(np.abs(n) > 1e-12) == 1 and n[np.argmax(np.abs(n))] < 0:
            continue
        n = np.where(np.abs(n) < 1e-15, 0.0, n)
        A.append(n)
        b.append(-off)
    if not A:
        return RateRegion(r.dim)
    A, b = _dedupe_halfspaces(np.array(A), np.array(b))
    return RateRegion(r.dim, [Piece(A, b)])


def _dedupe_halfspaces(A, b):
    scale = np.abs(A).max(axis=1)
    A, b = A / scale[:, None], b / scale
    keep = []
    for i in range(len(b)):
        if not any(np.allclose(A[i], A[j], atol=1e-9) and abs(b[i] - b[j]) < 1e-9 for j in keep):
            keep.append(i)
    return A[keep], b[keep]


def vertices_csv(r: RateRegion) -> str:
    """Vertex list as CSV with header ``R1,R2[,R3]``."""
    v = vertices(r)
    head = ",".join(f"R{k + 1}" for k in range(r.dim))
    lines = [head] + [",".join(f"{x:.12g}" for x in row) for row in v]
    return "\n".join(lines) + "\n"


def same_region(r1: RateRegion, r2: RateRegion, tol: float = 1e-9) -> bool:
    """Vertex sets of the two closures agree within ``tol``."""
    v1, v2 = vertices(r1), vertices(r2)
    if v1.shape != v2.shape:
        return False
    return all(np.min(np.max(np.abs(v2 - p), axis=1)) <= tol for p in v1) and all(
        np.min(np.max(np.abs(v1 - p), axis=1)) <= tol for p in v2
    )


# ---------------------------------------------------------------------------
# finite auxiliary models
# ---------------------------------------------------------------------------


class FiniteModel:
    """Auxiliaries ``U_k`` on finite supports and the channel they induce.

    Parameters
    ----------
    supports : sequence of int arrays
        Support values of each ``U_k``: field labels when ``field`` is given,
        otherwise integers combined over the reals.
    pmfs : sequence of float arrays
        Probabilities aligned with ``supports``.
    cond : ndarray
        ``P(y | u_1, ..., u_K)`` with shape ``(n_1, ..., n_K, |Y|)``.
    field : FiniteField, optional
    """

    def __init__(self, supports, pmfs, cond, field: FiniteField | None = None):
        self.supports = [np.asarray(s, dtype=np.int64) for s in supports]
        self.pmfs = [np.asarray(p, dtype=float) for p in pmfs]
        self.field = field
        self.K = len(self.supports)
        cond = np.asarray(cond, dtype=float)
        shape = tuple(len(s) for s in self.supports)
        if cond.shape[:-1] != shape or len(self.pmfs) != self.K:
            raise ValueError("supports, pmfs and channel tensor disagree in shape")
        for p in self.pmfs:
            if abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
                raise ValueError("invalid auxiliary pmf")
        self.cond = cond
        pu = self.pmfs[0]
        for p in self.pmfs[1:]:
            pu = np.multiply.outer(pu, p)
        self.pu = pu.ravel()
        self.J = self.pu[:, None] * cond.reshape(-1, cond.shape[-1])
        grids = np.meshgrid(*self.supports, indexing="ij")
        self.grid = [g.ravel() for g in grids]
        self.py = self.J.sum(axis=0)
        self.HY = entropy(self.py)
        self.H_u = [entropy(p) for p in self.pmfs]
        # H(Y | U) term by term
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.cond.reshape(-1, cond.shape[-1])
            lc = np.where(c > 0, np.log2(np.where(c > 0, c, 1.0)), 0.0)
        self._hy_given_u = float(-(self.pu * (c * lc).sum(axis=1)).sum())
        self._cache: dict = {}

    # --- building blocks -------------------------------------------------
    def combo(self, coeffs) -> np.ndarray:
        """Labels of ``sum_k coeffs[k] U_k`` on the flattened support grid."""
        coeffs = [int(c) for c in coeffs]
        if len(coeffs) != self.K:
            raise ValueError("coefficient vector length differs from K")
        if self.field is None:
            return sum(c * g for c, g in zip(coeffs, self.grid))
        f = self.field
        acc = np.zeros_like(self.grid[0])
        for c, g in zip(coeffs, self.grid):
            cc = c % f.q if f.is_prime else c
            acc = f.add(acc, f.mul(cc, g))
        return acc

    def _key(self, labels) -> np.ndarray:
        if len(labels) == 0:
            return np.zeros(self.pu.size, dtype=np.int64)
        stack = np.stack([np.asarray(l, dtype=np.int64) for l in labels], axis=1)
        _, inv = np.unique(stack, axis=0, return_inverse=True)
        return inv.ravel()

    def h_with_y(self, labels) -> float:
        """``H(L, Y)`` for a tuple of label functions ``L`` of the auxiliaries."""
        key = self._key(labels)
        order = np.argsort(key, kind="stable")
        ks = key[order]
        starts = np.flatnonzero(np.r_[True, ks[1:] != ks[:-1]])
        agg = np.add.reduceat(self.J[order], starts, axis=0)
        return entropy(agg)

    def h_of(self, labels) -> float:
        key = self._key(labels)
        return entropy(np.bincount(key, weights=self.pu))

    def h_given_y(self, labels) -> float:
        """``H(L | Y)``."""
        return self.h_with_y(labels) - self.HY

    # --- information quantities ------------------------------------------
    @property
    def I_all(self) -> float:
        """``I(U_1, ..., U_K; Y)``."""
        return max(0.0, self.HY - self._hy_given_u)

    def I_given_rest(self, k: int) -> float:
        """``I(U_k; Y | U_rest)``."""
        rest = [self.grid[j] for j in range(self.K) if j != k]
        return max(0.0, self.h_with_y(rest) - self.h_of(rest) - self._hy_given_u)

    def hw_given_y(self, coeffs) -> float:
        key = ("w", tuple(int(c) for c in coeffs))
        if key not in self._cache:
            self._cache[key] = self.h_given_y([self.combo(coeffs)])
        return self._cache[key]

    def icf(self, coeffs) -> tuple:
        """``(H(U_k) - H(W_a | Y))_k``."""
        h = self.hw_given_y(coeffs)
        return tuple(self.H_u[k] - h for k in range(self.K))


def model_from_mac(mac, pmfs, maps=None, f: FiniteField | int | None = None, quantizer=None) -> FiniteModel:
    """Field model from full-alphabet pmfs over ``F_q``.

    ``pmfs[k]`` has length ``q`` and ``maps[k][u]`` gives the channel input
    for field element ``u``. When ``maps`` is omitted ``mac`` must already be
    a :class:`DiscreteMac` over the auxiliary alphabets.
    """
    if f is not None and not isinstance(f, FiniteField):
        f = field_new(f)
    pmfs = [np.asarray(p, dtype=float) for p in pmfs]
    if f is not None and any(p.size != f.q for p in pmfs):
        raise ValueError("pmf length must equal the field order")
    supports = [np.flatnonzero(p > 0) for p in pmfs]
    if maps is None:
        if not isinstance(mac, ch.DiscreteMac):
            raise ValueError("maps are required for a Gaussian channel")
        maps = [np.arange(n) for n in mac.inputs]
    sub_maps = [np.asarray(m)[s] for m, s in zip(maps, supports)]
    ind = ch.induced_channel(mac, sub_maps, quantizer)
    return FiniteModel(supports, [p[s] for p, s in zip(pmfs, supports)], ind.cond, f)


def integer_model(mac, supports, pmfs, maps, quantizer=None, plan: TranslationPlan | None = None) -> FiniteModel:
    """Model over integer supports; with ``plan`` the supports become residues mod ``q``."""
    supports = [np.asarray(s, dtype=np.int64) for s in supports]
    pmfs = [np.asarray(p, dtype=float) for p in pmfs]
    keep = [p > 0 for p in pmfs]
    supports = [s[k] for s, k in zip(supports, keep)]
    pmfs = [p[k] for p, k in zip(pmfs, keep)]
    maps = [np.asarray(m)[k] for m, k in zip(maps, keep)]
    ind = ch.induced_channel(mac, maps, quantizer)
    if plan is None:
        return FiniteModel(supports, pmfs, ind.cond, None)
    return FiniteModel([plan.to_field(s) for s in supports], pmfs, ind.cond, plan.field)


# ---------------------------------------------------------------------------
# single linear combination (two users)
# ---------------------------------------------------------------------------


def linear_comb_pmf(pmfs, a, f: FiniteField | int | None = None, supports=None):
    """Exact pmf of ``W_a`` by exhaustive convolution.

    Returns ``(values, probs)``. In field mode ``values`` is ``0..q-1``; in
    integer mode it is the sorted set of achievable sums.
    """
    a = [int(x) for x in a]
    if all(x == 0 for x in a):
        raise ValueError("coefficient vector must be nonzero")
    pmfs = [np.asarray(p, dtype=float) for p in pmfs]
    if f is not None:
        f = f if isinstance(f, FiniteField) else field_new(f)
        supports = [np.arange(p.size) for p in pmfs]
    elif supports is None:
        raise ValueError("integer mode needs supports")
    grids = np.meshgrid(*[np.asarray(s, dtype=np.int64) for s in supports], indexing="ij")
    probs = pmfs[0]
    for p in pmfs[1:]:
        probs = np.multiply.outer(probs, p)
    probs = probs.ravel()
    if f is None:
        w = sum(c * g.ravel() for c, g in zip(a, grids))
        vals, inv = np.unique(w, return_inverse=True)
        return vals, np.bincount(inv.ravel(), weights=probs, minlength=vals.size)
    w = np.zeros(probs.size, dtype=np.int64)
    for c, g in zip(a, grids):
        w = f.add(w, f.mul(c % f.q if f.is_prime else c, g.ravel()))
    return np.arange(f.q), np.bincount(w, weights=probs, minlength=f.q)


def icf_finite(mac_induced, pmfs, a, f) -> tuple:
    """``(I_CF,1, I_CF,2)`` for field pmfs and a channel over ``F_q`` inputs."""
    if len(a) != len(pmfs):
        raise ValueError("coefficient vector and pmf list differ in length")
    return model_from_mac(mac_induced, pmfs, None, f).icf(a)


def projective_vectors(f: FiniteField) -> list:
    """One representative of each line through the origin of ``F_q^2``."""
    return [(1, r) for r in range(f.q)] + [(0, 1)]


def nonzero_vectors(f: FiniteField) -> list:
    return [(x, y) for x in range(f.q) for y in range(f.q) if (x, y) != (0, 0)]


def integer_vectors(bmax: int) -> list:
    """Canonical nonzero integer pairs with entries in ``[-bmax, bmax]``."""
    out = []
    for x in range(0, bmax + 1):
        for y in range(-bmax, bmax + 1):
            if (x, y) == (0, 0) or (x == 0 and y < 0):
                continue
            if math.gcd(x, abs(y)) != 1:
                continue
            out.append((x, y))
    return out


def b_candidates(model: FiniteModel, full: bool = False) -> list:
    if model.field is None:
        raise ValueError("integer models need an explicit candidate set")
    return nonzero_vectors(model.field) if full else projective_vectors(model.field)


def lmac_bound(model: FiniteModel, k: int, bset=None) -> tuple:
    """``max_b min{I_CF,k(b), I(U;Y) - I_CF,other(b)}`` and its maximizer."""
    bset = b_candidates(model) if bset is None else bset
    I12 = model.I_all
    best, arg = -math.inf, None
    for bv in bset:
        icf = model.icf(bv)
        v = min(icf[k], I12 - icf[1 - k])
        if v > best + 1e-15:
            best, arg = v, tuple(bv)
    return best, arg


def _lmac_pieces(bound1, bound2, I1g2, I2g1, I12) -> list:
    p1 = Piece([[1, 0], [0, 1], [1, 1]], [bound1, I2g1, I12])
    p2 = Piece([[1, 0], [0, 1], [1, 1]], [I1g2, bound2, I12])
    return [p1, p2]


def region_lmac(model: FiniteModel, bset=None) -> RateRegion:
    """Multiple-access region with a shared nested linear codebook."""
    if model.K != 2:
        raise ValueError("two users required")
    b1, _ = lmac_bound(model, 0, bset)
    b2, _ = lmac_bound(model, 1, bset)
    return RateRegion(2, _lmac_pieces(b1, b2, model.I_given_rest(0), model.I_given_rest(1), model.I_all))


def region_cf(model: FiniteModel, a) -> RateRegion:
    """Box ``R_k < I_CF,k(a)``; users with zero coefficient are capped by ``I(U_k; Y | U_other)``."""
    icf = model.icf(a)
    bounds = []
    for k in range(2):
        zero = (int(a[k]) % model.field.q == 0) if model.field is not None and model.field.is_prime else int(a[k]) == 0
        bounds.append(model.I_given_rest(k) if zero else icf[k])
    return box(bounds)


def region_from_model(model: FiniteModel, a, bset=None) -> RateRegion:
    return union(region_cf(model, a), region_lmac(model, bset))


def region_thm1(mac, pmfs, a, f, maps=None, quantizer=None, full_b: bool = False) -> RateRegion:
    """Compute-forward region over ``F_q``: ``R_CF(a)`` union ``R_LMAC``.

    Parameters
    ----------
    mac : DiscreteMac or GaussianMac
    pmfs : pair of length-``q`` arrays
    a : pair of field elements
    f : FiniteField or int
    maps : pair of arrays, optional
        Symbol mappings indexed by field element. Without them ``mac`` is
        taken to be the induced channel already.
    full_b : bool
        Enumerate all ``q^2 - 1`` vectors instead of one per projective line.
        Both give the same region since ``H(W_b|Y)`` is invariant to scaling ``b``.
    """
    model = model_from_mac(mac, pmfs, maps, f, quantizer)
    if len(a) != 2:
        raise ValueError("two users required")
    return region_from_model(model, a, b_candidates(model, full_b))


def region_thm2(mac, supports, pmfs, maps, a, q: int | None = None, quantizer=None):
    """Integer compute-forward region via a prime field that preserves the sums.

    Returns ``(region, plan)``.
    """
    alph = [np.asarray(s)[np.asarray(p) > 0] for s, p in zip(supports, pmfs)]
    plan = min_prime_q(a, alph) if q is None else plan_for(q, a, alph)
    model = integer_model(mac, supports, pmfs, maps, quantizer, plan)
    a_f = [int(x) % plan.q for x in a]
    return region_from_model(model, a_f), plan


# ---------------------------------------------------------------------------
# equivalent explicit (b, c) form
# ---------------------------------------------------------------------------


def region_equiv_rr(model: FiniteModel) -> RateRegion:
    """Region from the explicit ``(b, c)`` constraint system.

    For each pair of linearly independent ``b, c`` the pair
    ``min(R_1 - H(U_1), R_2 - H(U_2)) < T`` splits into two half-planes, each
    intersected with the classical pentagon bounds.
    """
    if model.field is None or model.K != 2:
        raise ValueError("field model with two users required")
    f = model.field
    I12, I1, I2 = model.I_all, model.I_given_rest(0), model.I_given_rest(1)
    H1, H2 = model.H_u
    pieces = []
    seen = set()
    vecs = nonzero_vectors(f)
    for bv in vecs:
        wb = model.combo(bv)
        t_b = -model.h_given_y([wb])
        for cv in vecs:
            if rank_over_field(np.array([bv, cv]), f) < 2:
                continue
            wc = model.combo(cv)
            # I(W_c; Y, W_b) - H(W_c) = -H(W_c | Y, W_b)
            t_c = -(model.h_with_y([wc, wb]) - model.h_with_y([wb]))
            T = min(t_b, t_c)
            key = round(T, 13)
            if key in seen:
                continue
            seen.add(key)
            pieces.append(Piece([[1, 0], [0, 1], [1, 1], [1, 0]], [I1, I2, I12, H1 + T]))
            pieces.append(Piece([[1, 0], [0, 1], [1, 1], [0, 1]], [I1, I2, I12, H2 + T]))
    return RateRegion(2, pieces)


# ---------------------------------------------------------------------------
# two linear combinations, K users
# ---------------------------------------------------------------------------


def region_thm4(model: FiniteModel, a1, a2, full_b: bool = False) -> RateRegion:
    """Region for recovering ``W_{a1}`` and ``W_{a2}`` over ``F_q``.

    Union of the two alternative constraint systems. Sum constraints are
    instantiated for every ``k`` in the support of ``a1`` and ``j`` in the
    support of ``a2`` (``2 R_k`` when ``k = j``). Users in neither support
    are capped by ``I(U_k; Y | U_rest)`` so that pieces stay bounded.
    """
    f = model.field
    if f is None:
        raise ValueError("field model required")
    K = model.K
    a1 = [int(x) % f.q for x in a1] if f.is_prime else [int(x) for x in a1]
    a2 = [int(x) % f.q for x in a2] if f.is_prime else [int(x) for x in a2]
    if len(a1) != K or len(a2) != K:
        raise ValueError("coefficient vectors must have length K")
    if rank_over_field(np.array([a1, a2]), f) < 2:
        raise ValueError("coefficient vectors are linearly dependent; use the single-combination region instead")
    K1 = [k for k in range(K) if a1[k] != 0]
    K2 = [k for k in range(K) if a2[k] != 0]
    w1, w2 = model.combo(a1), model.combo(a2)
    H12_Y = model.h_given_y([w1, w2])
    h_w1w2y = model.h_with_y([w1, w2])
    h2_given = h_w1w2y - model.h_with_y([w1])  # H(W2 | Y, W1)
    h1_given = h_w1w2y - model.h_with_y([w2])  # H(W1 | Y, W2)
    worst = math.inf  # min_b max{H(V_b|Y), H(W1,W2|Y,V_b)}
    for bv in b_candidates(model, full_b):
        v = f.add(f.mul(bv[0], w1), f.mul(bv[1], w2))
        hv = model.h_given_y([v])
        hrest = h_w1w2y - model.h_with_y([v])
        worst = min(worst, max(hv, hrest))
    Hu = model.H_u

    def system(first_max: bool) -> Piece:
        rows, bounds = [], []
        e = np.eye(K)
        for k in K1:
            rows.append(e[k])
            bounds.append(Hu[k] - worst if first_max else Hu[k] - h1_given)
        for j in K2:
            rows.append(e[j])
            bounds.append(Hu[j] - h2_given if first_max else Hu[j] - worst)
        for k in K1:
            for j in K2:
                rows.append(e[k] + e[j])
                bounds.append(Hu[k] + Hu[j] - H12_Y)
        for k in range(K):
            if k not in K1 and k not in K2:
                rows.append(e[k])
                bounds.append(model.I_given_rest(k))
        return Piece(np.array(rows), bounds)

    return RateRegion(K, [system(True), system(False)])


# ---------------------------------------------------------------------------
# Gaussian closed forms
# ---------------------------------------------------------------------------


def _gcd(a) -> int:
    return math.gcd(*[abs(int(x)) for x in a])


def gaussian_icf(h, P, beta, a) -> tuple:
    """Closed-form ``(I_CF,1, I_CF,2)`` for Gaussian auxiliaries, in bits.

    With scalar ``P`` this is the symmetric-power formula. With a pair
    ``(P_1, P_2)`` it evaluates ``0.5 log2(Var(U_k) / Var(W_a | Y))`` for
    ``U_k ~ N(0, beta_k^2 P_k)`` and ``x_k = u_k / beta_k``, which reduces to
    the symmetric formula when ``P_1 = P_2``.
    """
    h1, h2 = (float(x) for x in h)
    b1, b2 = (float(x) for x in beta)
    a1, a2 = (int(x) for x in a)
    if b1 == 0 or b2 == 0:
        raise ValueError("beta must be nonzero")
    if a1 == 0 and a2 == 0:
        raise ValueError("coefficient vector must be nonzero")
    g = math.log2(_gcd(a))
    if np.ndim(P) == 0:
        P = float(P)
        num = 1 + h1**2 * P + h2**2 * P
        den = (a1 * b1 * h2 - a2 * b2 * h1) ** 2 * P + (a1 * b1) ** 2 + (a2 * b2) ** 2
        return tuple(0.5 * math.log2(bk**2 * num / den) + g for bk in (b1, b2))
    P1, P2 = (float(x) for x in P)
    vy = 1 + h1**2 * P1 + h2**2 * P2
    den = (a1 * b1) ** 2 * P1 + (a2 * b2) ** 2 * P2 + P1 * P2 * (a1 * b1 * h2 - a2 * b2 * h1) ** 2
    return tuple(0.5 * math.log2(bk**2 * pk * vy / den) + g for bk, pk in ((b1, P1), (b2, P2)))


def gaussian_mac_info(h, P) -> tuple:
    """``(I(X1;Y|X2), I(X2;Y|X1), I(X1,X2;Y))`` for Gaussian inputs."""
    h1, h2 = (float(x) for x in h)
    P1, P2 = (float(P), float(P)) if np.ndim(P) == 0 else (float(P[0]), float(P[1]))
    return float(C(h1**2 * P1)), float(C(h2**2 * P2)), float(C(h1**2 * P1 + h2**2 * P2))


def region_lmac_gaussian(h, P, beta, bmax: int = 8) -> RateRegion:
    """Gaussian ``R_LMAC`` with the max over integer ``b`` in ``[-bmax, bmax]^2``."""
    I1, I2, I12 = gaussian_mac_info(h, P)
    bounds = []
    for k in range(2):
        best = -math.inf
        for bv in integer_vectors(bmax):
            icf = gaussian_icf(h, P, beta, bv)
            best = max(best, min(icf[k], I12 - icf[1 - k]))
        bounds.append(best)
    return RateRegion(2, _lmac_pieces(bounds[0], bounds[1], I1, I2, I12))


def region_cf_gaussian(h, P, beta, a) -> RateRegion:
    I1, I2, _ = gaussian_mac_info(h, P)
    icf = gaussian_icf(h, P, beta, a)
    return box([icf[k] if int(a[k]) != 0 else (I1, I2)[k] for k in range(2)])


def region_cor1(h, P, beta, a, bmax: int = 8) -> RateRegion:
    """Gaussian compute-forward region ``R_CF(a)`` union ``R_LMAC``."""
    return union(region_cf_gaussian(h, P, beta, a), region_lmac_gaussian(h, P, beta, bmax))


def classical_mac_region(I1: float, I2: float, I12: float) -> RateRegion:
    return polytope(2, [([1, 0], I1), ([0, 1], I2), ([1, 1], I12)])


def example4_regions(P1: float = 25.0, P2: float = 18.0, h: float = math.sqrt(2.0), bmax: int = 8) -> dict:
    """Receiver regions of the two-receiver example and their combination.

    Returns a dict keyed by scheme (``"nested_linear"``, ``"iid"``) holding
    ``rx1``, ``rx2``, ``intersection`` and ``hull`` regions.
    """
    g1, g2 = (1.0, h), (1.0, 1.0)
    P = (P1, P2)
    beta = (1.0, 1.0)
    nl1 = region_lmac_gaussian(g1, P, beta, bmax)
    nl2 = region_cor1(g2, P, beta, (1, 1), bmax)
    iid1 = classical_mac_region(*gaussian_mac_info(g1, P))
    iid2 = classical_mac_region(*gaussian_mac_info(g2, P))
    out = {}
    for name, (r1, r2) in {"nested_linear": (nl1, nl2), "iid": (iid1, iid2)}.items():
        inter = intersect(r1, r2)
        out[name] = {"rx1": r1, "rx2": r2, "intersection": inter, "hull": convex_hull(inter)}
    return out


# ---------------------------------------------------------------------------
# continuous auxiliaries as a quantization limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PdfSpec:
    """Auxiliary density: ``gaussian`` (``scale`` = std), ``uniform`` (half-width)
    or ``truncated_gaussian`` (std ``scale``, cut at ``+-tau``)."""

    kind: str
    scale: float
    tau: float = math.inf

    def support(self, T: float = 7.0) -> float:
        if self.kind == "uniform":
            return self.scale
        return min(self.tau, T * self.scale)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return norm.cdf(x / self.scale)
        if self.kind == "uniform":
            return np.clip((x + self.scale) / (2 * self.scale), 0.0, 1.0)
        if self.kind == "truncated_gaussian":
            lo, hi = norm.cdf(-self.tau / self.scale), norm.cdf(self.tau / self.scale)
            return np.clip((norm.cdf(np.clip(x, -self.tau, self.tau) / self.scale) - lo) / (hi - lo), 0.0, 1.0)
        raise ValueError(f"unknown density {self.kind!r}")

    def differential_entropy(self) -> float:
        if self.kind == "gaussian":
            return 0.5 * math.log2(2 * math.pi * math.e * self.scale**2)
        if self.kind == "uniform":
            return math.log2(2 * self.scale)
        raise ValueError("closed form only for gaussian and uniform")


def quantize_pdf(pdf: PdfSpec, delta: float, T: float = 7.0):
    """Masses of ``[U]_delta`` on the grid ``i * delta`` (nearest point).

    Returns ``(i, probs)`` with integer grid indices.
    """
    m = int(math.ceil(pdf.support(T) / delta))
    i = np.arange(-m, m + 1)
    edges = np.concatenate([[-np.inf], (i[:-1] + 0.5) * delta, [np.inf]])
    p = np.diff(pdf.cdf(edges))
    p = np.clip(p, 0.0, None)
    keep = p > 0
    return i[keep], p[keep] / p[keep].sum()


def discretized_entropy(pdf: PdfSpec, delta: float) -> float:
    """``H([U]_delta) + log2(delta)``, which tends to ``h(U)``."""
    _, p = quantize_pdf(pdf, delta, T=12.0)
    return entropy(p) + math.log2(delta)


@dataclass
class LimitReport:
    deltas: list
    values: list  # per-delta (I_CF,1, I_CF,2)
    extrapolated: tuple
    monotone: bool = True
    notes: list = field(default_factory=list)


def _thm3_point(mac: ch.GaussianMac, pdfs, scales, a, delta: float, T: float, chunk: int = 4096):
    (i1, p1), (i2, p2) = (quantize_pdf(p, delta, T) for p in pdfs)
    I1, I2 = np.meshgrid(i1, i2, indexing="ij")
    pp = np.multiply.outer(p1, p2).ravel()
    lev = (mac.h[0] * scales[0] * I1 + mac.h[1] * scales[1] * I2).ravel() * delta
    w = (int(a[0]) * I1 + int(a[1]) * I2).ravel()
    sd = math.sqrt(1 + sum(h**2 * P for h, P in zip(mac.h, mac.power)))
    q = ch.OutputQuantizer(max(400, int(math.ceil((8 * sd + 2) ** 2))))
    wu, winv = np.unique(w, return_inverse=True)
    winv = winv.ravel()
    acc = np.zeros((wu.size, q.bins))
    for s in range(0, pp.size, chunk):
        sl = slice(s, s + chunk)
        rows = pp[sl, None] * q.bin_probs(lev[sl])
        np.add.at(acc, winv[sl], rows)
    hwy = entropy(acc) - entropy(acc.sum(axis=0))
    return entropy(p1) - hwy, entropy(p2) - hwy


def region_thm3_limit(mac: ch.GaussianMac, pdfs, scales, a, deltas=None, T: float = 6.0) -> LimitReport:
    """``I_CF`` for continuous auxiliaries as a limit of quantized evaluations.

    Each auxiliary is quantized to ``delta Z``, sent as ``x_k = scales[k] u``,
    and the integer combination is evaluated against the quantized output.
    ``H([U_k]) - H(W | Y)`` then tends to ``h(U_k) - h(W_a|Y) + log2 gcd(a)``.
    The last two points are combined by Richardson extrapolation assuming
    an ``O(delta^2)`` error.
    """
    if deltas is None:
        s = min(p.scale for p in pdfs)
        deltas = [s / 2, s / 4, s / 8]
    vals = [_thm3_point(mac, pdfs, scales, a, d, T) for d in deltas]
    rep = LimitReport(list(deltas), vals, vals[-1])
    if len(vals) >= 2:
        d0, d1 = deltas[-2], deltas[-1]
        r = (d0 / d1) ** 2
        rep.extrapolated = tuple((r * v1 - v0) / (r - 1) for v0, v1 in zip(vals[-2], vals[-1]))
    if len(vals) >= 3:
        steps = [abs(vals[i + 1][0] - vals[i][0]) for i in range(len(vals) - 1)]
        rep.monotone = all(steps[i + 1] <= steps[i] for i in range(len(steps) - 1))
        if not rep.monotone:
            rep.notes.append("successive differences are not decreasing")
            warnings.warn("quantization sequence does not appear to converge", RuntimeWarning, stacklevel=2)
    return rep


def gaussian_thm3_limit(h, P, beta, a, deltas=None) -> LimitReport:
    """Quantization-limit estimate matching :func:`gaussian_icf`'s parametrization."""
    P1, P2 = (float(P), float(P)) if np.ndim(P) == 0 else (float(P[0]), float(P[1]))
    mac = ch.GaussianMac(tuple(h), (P1, P2))
    pdfs = [PdfSpec("gaussian", abs(beta[0]) * math.sqrt(P1)), PdfSpec("gaussian", abs(beta[1]) * math.sqrt(P2))]
    scales = (1.0 / beta[0], 1.0 / beta[1])
    return region_thm3_limit(mac, pdfs, scales, a, deltas)
