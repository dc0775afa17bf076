"""Nested linear codes at desk-scale blocklength.

The ensemble, the multicoding encoder and the exhaustive joint-typicality
decoders are implemented literally, so error rates and the statistical
structure of the ensemble can be measured by Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chisquare, norm

from . import channel as ch
from .gf import FiniteField, IndexEmbedding, eta, eta_all, field_new, rank_over_field
from .optimize import pmap
from .prob import kl_divergence, mismatched_exponent

DEFAULT_BUDGET = 2**22

# spawn-key purposes
_CODEBOOK, _MESSAGE, _ENCODER, _CHANNEL = range(4)


class BudgetError(ValueError):
    """The configured enumeration exceeds the hypothesis cap."""


class DecodeError(Exception):
    """Decoder failure; ``kind`` is ``"none"`` or ``"ambiguous"``."""

    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


def snap_rate(rate: float, n: int, q: int, mode: str = "nearest") -> float:
    """Round ``rate`` to a multiple of ``log2(q) / n``."""
    step = math.log2(q) / n
    x = rate / step
    k = math.ceil(x - 1e-9) if mode == "ceil" else round(x)
    return max(0, int(k)) * step


def auto_aux_rate(pmf, q: int, margin: float = 0.1) -> float:
    """``D(p_U || Unif(F_q)) + margin``."""
    return kl_divergence(np.asarray(pmf, dtype=float), np.full(q, 1.0 / q)) + margin


@dataclass
class SimConfig:
    """Parameters of a simulation campaign.

    Parameters
    ----------
    n, q : int
        Blocklength and field order.
    rates, aux_rates : tuple of float
        Message and auxiliary rates in bits per symbol. They must be
        multiples of ``log2(q) / n``; see :meth:`snapped`.
    pmfs : tuple of arrays
        Target ``p_{U_k}`` over ``F_q``.
    mac : DiscreteMac
        Channel whose inputs are indexed by field elements.
    """

    n: int
    q: int
    rates: tuple
    aux_rates: tuple
    pmfs: tuple
    mac: ch.DiscreteMac
    a: tuple = (1, 1)
    a2: tuple | None = None
    eps: float = 0.2
    eps_prime: float = 0.1
    trials: int = 1000
    seed: int = 0
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not 0 < self.eps_prime < self.eps:
            raise ValueError("need 0 < eps_prime < eps")
        self.pmfs = tuple(np.asarray(p, dtype=float) for p in self.pmfs)
        # decoders enumerate index pairs
        if len(self.pmfs) != 2 or len(self.a) != 2 or (self.a2 is not None and len(self.a2) != 2):
            raise ValueError("simulation supports two users")
        if any(p.size != self.q for p in self.pmfs):
            raise ValueError("pmfs must have length q")
        if self.mac.inputs != tuple(self.q for _ in self.pmfs):
            raise ValueError("channel inputs must be indexed by field elements")
        self.layout = IndexEmbedding.from_rates(self.n, self.rates, self.aux_rates, self.q)
        if self.hypotheses > self.budget:
            raise BudgetError(
                f"decoder would enumerate {self.hypotheses} hypotheses, above the cap of {self.budget}"
            )

    @classmethod
    def snapped(cls, n, q, rates, aux_rates, pmfs, mac, **kw) -> "SimConfig":
        """Build with message rates rounded and auxiliary rates rounded up to the digit grid."""
        r = tuple(snap_rate(x, n, q) for x in rates)
        ra = tuple(snap_rate(x, n, q, "ceil") for x in aux_rates)
        return cls(n, q, r, ra, tuple(pmfs), mac, **kw)

    @property
    def K(self) -> int:
        return len(self.pmfs)

    @property
    def field(self) -> FiniteField:
        return field_new(self.q)

    @property
    def hypotheses(self) -> int:
        lay = self.layout
        return math.prod(self.q ** (m + l) for m, l in zip(lay.msg_digits, lay.aux_digits))

    def joint(self) -> np.ndarray:
        """Target ``p(u_1, ..., u_K, y)``."""
        pu = self.pmfs[0]
        for p in self.pmfs[1:]:
            pu = np.multiply.outer(pu, p)
        return pu[..., None] * self.mac.cond

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "rates": [float(r) for r in self.rates],
            "aux_rates": [float(r) for r in self.aux_rates],
            "msg_digits": list(self.layout.msg_digits),
            "aux_digits": list(self.layout.aux_digits),
            "kappa": self.layout.kappa,
            "pmfs": [p.tolist() for p in self.pmfs],
            "mac": self.mac.to_json(),
            "a": list(self.a),
            "a2": None if self.a2 is None else list(self.a2),
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "trials": self.trials,
            "seed": self.seed,
            "budget": self.budget,
        }


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator labelled by ``key`` under the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


# ---------------------------------------------------------------------------
# ensemble
# ---------------------------------------------------------------------------


@dataclass
class NestedLinearCode:
    """Generator matrix ``G`` (``kappa x n``) and dithers shared by all users.

    Codewords are computed on demand: ``u_k(m, l) = eta(m, l) G + d_k``.
    """

    n: int
    f: FiniteField
    layout: IndexEmbedding
    G: np.ndarray
    d: np.ndarray
    seed: tuple = ()

    @property
    def K(self) -> int:
        return self.layout.K

    @property
    def kappa(self) -> int:
        return self.layout.kappa

    def codeword(self, k: int, m: int, l: int) -> np.ndarray:
        return self.f.add(self.f.dot(eta(m, l, k, self.layout), self.G), self.d[k])

    def codewords(self, k: int, m: int | None = None) -> np.ndarray:
        """All codewords of user ``k`` (rows ``m * n_aux + l``), or those of message ``m``."""
        E = eta_all(k, self.layout)
        if m is not None:
            na = self.layout.n_aux(k)
            E = E[m * na : (m + 1) * na]
        if self.kappa == 0:
            return np.broadcast_to(self.d[k], (E.shape[0], self.n)).copy()
        return self.f.add(self.f.dot(E, self.G), self.d[k][None, :])


def codebook_new(config: SimConfig | None = None, rng: np.random.Generator | None = None, *, n=None, q=None, layout=None):
    """Draw ``G`` and the dithers uniformly over ``F_q``.

    Either pass a :class:`SimConfig` (the master seed is used unless ``rng``
    is given) or the raw ``n``, ``q`` and ``layout``.
    """
    if config is not None:
        n, q, layout = config.n, config.q, config.layout
        if rng is None:
            rng = stream(config.seed, _CODEBOOK)
    if rng is None:
        raise ValueError("a generator or a config with a seed is required")
    f = field_new(q)
    G = rng.integers(0, q, size=(layout.kappa, n))
    d = rng.integers(0, q, size=(layout.K, n))
    return NestedLinearCode(n, f, layout, G, d)


def _typical_rows(U: np.ndarray, p: np.ndarray, eps: float) -> np.ndarray:
    """Robust-typicality mask for each row of symbol matrix ``U``."""
    cells = p.size
    N, n = U.shape
    flat = (np.arange(N)[:, None] * cells + U).ravel()
    counts = np.bincount(flat, minlength=N * cells).reshape(N, cells)
    return np.all(np.abs(counts / n - p[None, :]) <= eps * p[None, :] + 1e-12, axis=1)


def encode(code: NestedLinearCode, k: int, m: int, pmf, eps_prime: float, rng: np.random.Generator):
    """Multicoding encoder.

    Returns ``(l, u, found)``: the chosen auxiliary index, its codeword and
    whether it was typical (``False`` means the random fallback was used).
    """
    U = code.codewords(k, m)
    mask = _typical_rows(U, np.asarray(pmf, dtype=float), eps_prime)
    cand = np.flatnonzero(mask)
    if cand.size:
        l = int(cand[rng.integers(cand.size)])
        return l, U[l], True
    l = int(rng.integers(U.shape[0]))
    return l, U[l], False


# ---------------------------------------------------------------------------
# decoders
# ---------------------------------------------------------------------------


def _digits_to_int(D: np.ndarray, q: int) -> np.ndarray:
    if D.shape[-1] == 0:
        return np.zeros(D.shape[:-1], dtype=np.int64)
    w = q ** np.arange(D.shape[-1] - 1, -1, -1, dtype=np.int64)
    return D @ w


def _typical_pairs(code: NestedLinearCode, y: np.ndarray, joint: np.ndarray, eps: float, chunk: int = 1 << 16):
    """Yield blocks ``(i, j)`` of codeword pairs jointly typical with ``y``.

    Codewords failing the marginal ``(u_k, y)`` test are dropped first; that
    test is implied by joint typicality so the result is exact.
    """
    q = code.f.q
    ny = joint.shape[-1]
    y = np.asarray(y, dtype=np.int64)
    U = [code.codewords(k) for k in range(2)]
    marg = [joint.sum(axis=1), joint.sum(axis=0)]
    keep = []
    for k in range(2):
        lab = U[k] * ny + y[None, :]
        keep.append(np.flatnonzero(_typical_rows(lab, marg[k].ravel(), eps)))
    S1, S2 = keep
    if S1.size == 0 or S2.size == 0:
        return
    pj = joint.ravel()
    cells = pj.size
    n = code.n
    rows = max(1, chunk // S2.size)
    U2y = U[1][S2] * ny + y[None, :]
    for s in range(0, S1.size, rows):
        I = S1[s : s + rows]
        lab = (U[0][I][:, None, :] * q * ny) + U2y[None, :, :]
        B = I.size * S2.size
        flat = (np.arange(B).reshape(I.size, S2.size)[:, :, None] * cells + lab).ravel()
        counts = np.bincount(flat, minlength=B * cells).reshape(B, cells)
        ok = np.all(np.abs(counts / n - pj[None, :]) <= eps * pj[None, :] + 1e-12, axis=1)
        hit = np.flatnonzero(ok)
        if hit.size:
            yield I[hit // S2.size], S2[hit % S2.size]


def _combination_keys(code: NestedLinearCode, a, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    f = code.f
    E1 = eta_all(0, code.layout)[i]
    E2 = eta_all(1, code.layout)[j]
    c1, c2 = (int(x) % f.q if f.is_prime else int(x) for x in a)
    S = f.add(f.mul(c1, E1), f.mul(c2, E2))
    return _digits_to_int(S, f.q)


def decode_single(code: NestedLinearCode, y, a, eps: float, joint: np.ndarray) -> int:
    """Unique ``s_a`` whose index vector is ``a1 eta(m1,l1) + a2 eta(m2,l2)``
    for some jointly typical codeword pair.

    Raises
    ------
    DecodeError
        ``"none"`` when no pair is typical, ``"ambiguous"`` when two
        different ``s_a`` survive.
    """
    if code.K != 2:
        raise ValueError("the simulator decodes two-user codes")
    found = None
    for i, j in _typical_pairs(code, y, joint, eps):
        keys = np.unique(_combination_keys(code, a, i, j))
        if found is not None:
            keys = np.union1d(keys, [found])
        if keys.size > 1:
            raise DecodeError("ambiguous")
        found = int(keys[0])
    if found is None:
        raise DecodeError("none")
    return found


def decode_pair(code: NestedLinearCode, y, a1, a2, eps: float, joint: np.ndarray) -> tuple:
    """Unique ``(s_{a1}, s_{a2})`` realizable by a jointly typical codeword pair."""
    if code.K != 2:
        raise ValueError("the simulator decodes two-user codes")
    f = code.f
    A = np.array([[int(x) % f.q for x in a1], [int(x) % f.q for x in a2]]) if f.is_prime else np.array([a1, a2])
    if rank_over_field(A, f) < 2:
        raise ValueError("a1 and a2 must be linearly independent")
    found = None
    for i, j in _typical_pairs(code, y, joint, eps):
        k1 = _combination_keys(code, a1, i, j)
        k2 = _combination_keys(code, a2, i, j)
        pairs = set(zip(k1.tolist(), k2.tolist()))
        if found is not None:
            pairs.add(found)
        if len(pairs) > 1:
            raise DecodeError("ambiguous")
        found = next(iter(pairs))
    if found is None:
        raise DecodeError("none")
    return found


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple:
    if trials == 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + level / 2)
    p = errors / trials
    den = 1 + z**2 / trials
    mid = (p + z**2 / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / den
    return float(max(0.0, mid - half)), float(min(1.0, mid + half))


def run_trial(config: SimConfig, t: int) -> dict:
    """One trial with a fresh codebook; every random draw has its own stream."""
    code = codebook_new(config, stream(config.seed, t, _CODEBOOK))
    lay = config.layout
    msgs, auxs, us, enc_ok = [], [], [], []
    for k in range(config.K):
        m = int(stream(config.seed, t, _MESSAGE, k).integers(lay.n_messages(k)))
        l, u, ok = encode(code, k, m, config.pmfs[k], config.eps_prime, stream(config.seed, t, _ENCODER, k, m))
        msgs.append(m)
        auxs.append(l)
        us.append(u)
        enc_ok.append(ok)
    y = ch.sample(config.mac, us, stream(config.seed, t, _CHANNEL))
    joint = config.joint()
    idx = [m * lay.n_aux(k) + l for k, (m, l) in enumerate(zip(msgs, auxs))]
    out = {"encoder_fallback": int(not all(enc_ok)), "none": 0, "ambiguous": 0, "wrong": 0}
    i, j = np.array([idx[0]]), np.array([idx[1]])
    try:
        if config.a2 is None:
            truth = int(_combination_keys(code, config.a, i, j)[0])
            got = decode_single(code, y, config.a, config.eps, joint)
        else:
            truth = (int(_combination_keys(code, config.a, i, j)[0]), int(_combination_keys(code, config.a2, i, j)[0]))
            got = decode_pair(code, y, config.a, config.a2, config.eps, joint)
        out["wrong"] = int(got != truth)
    except DecodeError as e:
        out[e.kind] = 1
    out["error"] = int(out["none"] or out["ambiguous"] or out["wrong"])
    return out


def run_trials(config: SimConfig) -> dict:
    """Error-rate estimate with a Wilson 95% interval.

    Trials are independent and may run on the thread pool; the counters do
    not depend on scheduling.
    """
    res = pmap(lambda t: run_trial(config, t), list(range(config.trials)))
    tot = {k: int(sum(r[k] for r in res)) for k in ("error", "none", "ambiguous", "wrong", "encoder_fallback")}
    lo, hi = wilson_interval(tot["error"], config.trials)
    return {
        "trials": config.trials,
        "errors": tot["error"],
        "error_rate": tot["error"] / config.trials,
        "wilson_lo": lo,
        "wilson_hi": hi,
        "none": tot["none"],
        "ambiguous": tot["ambiguous"],
        "wrong": tot["wrong"],
        "encoder_fallback": tot["encoder_fallback"],
    }


def nonincreasing(points, level: float = 0.95) -> bool:
    """Interval-aware trend: no later lower bound above an earlier upper bound."""
    for a, b in zip(points, points[1:]):
        if b["wilson_lo"] > a["wilson_hi"]:
            return False
    return True


# ---------------------------------------------------------------------------
# ensemble lemma checks
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    statistic: float
    pvalue: float
    passed: bool
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "statistic": float(self.statistic),
            "pvalue": float(self.pvalue),
            "passed": bool(self.passed),
            "info": self.info,
        }


def _chi2_uniform(cells: np.ndarray, ncells: int) -> tuple:
    counts = np.bincount(cells, minlength=ncells)
    stat, p = chisquare(counts)
    return float(stat), float(p)


def _batch_codewords(f: FiniteField, E: np.ndarray, G: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``E @ G + d`` for a batch: ``E`` (rows, kappa), ``G`` (B, kappa, n), ``d`` (B, n)."""
    q = f.q
    if not f.is_prime:
        raise ValueError("batched checks use prime fields")
    return (np.einsum("rk,bkn->brn", E, G) + d[:, None, :]) % q


def _cell_index(X: np.ndarray, q: int) -> np.ndarray:
    X = X.reshape(X.shape[0], -1)
    w = q ** np.arange(X.shape[1] - 1, -1, -1, dtype=np.int64)
    return X @ w


def check_uniformity(q: int = 2, n: int = 6, samples: int = 100_000, seed: int = 0, alpha: float = 0.01) -> CheckResult:
    """Codeword tuple ``(u_1(l_1), u_2(l_2))`` is uniform over ``F_q^{2n}``."""
    f = field_new(q)
    lay = IndexEmbedding((0, 0), (2, 2), q)
    rng = stream(seed, 101, q, n)
    G = rng.integers(0, q, (samples, lay.kappa, n))
    d = rng.integers(0, q, (samples, 2, n))
    E = np.array([eta(0, 1, 0, lay), eta(0, 2, 1, lay)])
    u1 = _batch_codewords(f, E[:1], G, d[:, 0])[:, 0]
    u2 = _batch_codewords(f, E[1:], G, d[:, 1])[:, 0]
    cells = _cell_index(np.concatenate([u1, u2], axis=1), q)
    stat, p = _chi2_uniform(cells, q ** (2 * n))
    return CheckResult(f"uniformity_q{q}", stat, p, p > alpha, {"q": q, "n": n, "samples": samples})


def check_pairwise(q: int = 2, n: int = 6, coords: int = 3, samples: int = 100_000, seed: int = 0, alpha: float = 0.01) -> CheckResult:
    """Two codewords of one user with distinct indices are independent and uniform.

    The test runs on the first ``coords`` symbols of each codeword.
    """
    f = field_new(q)
    lay = IndexEmbedding((1,), (2,), q)
    rng = stream(seed, 102, q, n)
    G = rng.integers(0, q, (samples, lay.kappa, n))
    d = rng.integers(0, q, (samples, n))
    E = np.array([eta(0, 1, 0, lay), eta(1, 2, 0, lay)])
    U = _batch_codewords(f, E, G, d)[:, :, :coords]
    stat, p = _chi2_uniform(_cell_index(U, q), q ** (2 * coords))
    return CheckResult(f"pairwise_independence_q{q}", stat, p, p > alpha, {"q": q, "n": n, "coords": coords})


def check_full_rank(q: int = 2, n: int = 6, coords: int = 2, samples: int = 100_000, seed: int = 0, alpha: float = 0.01) -> CheckResult:
    """Codewords whose index matrix has rank ``K + t`` are jointly uniform.

    Uses ``K = 2`` users with indices ``(l_1, l_2, l~_1)`` chosen so that the
    matrix ``[e_k | eta(l)]`` has rank 3. The shared generator makes
    ``u_2(l_2)`` and ``u_1(l~_1)`` depend on the same ``G``, which is the
    point of the check.
    """
    f = field_new(q)
    lay = IndexEmbedding((0, 0), (2, 2), q)
    idx = [(0, 1), (1, 1), (0, 2)]  # (user, l)
    H = np.array([np.concatenate([np.eye(2, dtype=np.int64)[k], eta(0, l, k, lay)]) for k, l in idx])
    r = rank_over_field(H, f)
    if r != 3:
        raise AssertionError("index choice is not full rank")
    rng = stream(seed, 103, q, n)
    G = rng.integers(0, q, (samples, lay.kappa, n))
    d = rng.integers(0, q, (samples, 2, n))
    cols = []
    for k, l in idx:
        cols.append(_batch_codewords(f, eta(0, l, k, lay)[None, :], G, d[:, k])[:, 0, :coords])
    U = np.stack(cols, axis=1)
    stat, p = _chi2_uniform(_cell_index(U, q), q ** (3 * coords))
    return CheckResult(f"full_rank_independence_q{q}", stat, p, p > alpha, {"q": q, "n": n, "rank": r, "coords": coords})


def check_index_uniformity(
    q: int = 2, n: int = 6, pmf=(1 / 3, 2 / 3), msg_digits=(1, 1), aux_digits=(2, 2), eps_prime: float = 0.1,
    samples: int = 100_000, seed: int = 0, alpha: float = 0.01,
) -> CheckResult:
    """Messages drawn uniformly and indices chosen by the encoder are jointly uniform."""
    f = field_new(q)
    pmf = np.asarray(pmf, dtype=float)
    if pmf.size != q:
        pmf = np.full(q, 1.0 / q)
    lay = IndexEmbedding(tuple(msg_digits), tuple(aux_digits), q)
    rng = stream(seed, 104, q, n)
    G = rng.integers(0, q, (samples, lay.kappa, n))
    labels = []
    found = 0
    for k in range(lay.K):
        d = rng.integers(0, q, (samples, n))
        m = rng.integers(0, lay.n_messages(k), samples)
        E = eta_all(k, lay).reshape(lay.n_messages(k), lay.n_aux(k), lay.kappa)[m]
        U = (np.einsum("bak,bkn->ban", E, G) + d[:, None, :]) % q
        cnt = np.stack([(U == s).sum(axis=2) for s in range(q)], axis=2) / n
        ok = np.all(np.abs(cnt - pmf) <= eps_prime * pmf + 1e-12, axis=2)
        key = rng.random(ok.shape)
        anyok = ok.any(axis=1)
        key = np.where(ok | ~anyok[:, None], key, -1.0)
        l = key.argmax(axis=1)
        found += int(anyok.sum())
        labels.append(m * lay.n_aux(k) + l)
    sizes = [lay.n_messages(k) * lay.n_aux(k) for k in range(lay.K)]
    cells = np.ravel_multi_index(tuple(labels), sizes)
    stat, p = _chi2_uniform(cells, math.prod(sizes))
    return CheckResult(
        f"index_uniformity_q{q}", stat, p, p > alpha,
        {"q": q, "n": n, "typical_fraction": found / (samples * lay.K)},
    )


def index_set_counts(q: int, aux_digits) -> dict:
    """Exhaustive ``|I_r|`` over all ``(l_1..l_K, l~_1..l~_K)`` with zero messages."""
    f = field_new(q)
    K = len(aux_digits)
    lay = IndexEmbedding(tuple(0 for _ in aux_digits), tuple(aux_digits), q)
    rows = [[np.concatenate([np.eye(K, dtype=np.int64)[k], eta(0, l, k, lay)]) for l in range(lay.n_aux(k))] for k in range(K)]
    counts = {r: 0 for r in range(2 * K + 1)}
    for ls in itertools.product(*[range(lay.n_aux(k)) for k in range(K)]):
        top = [rows[k][l] for k, l in enumerate(ls)]
        for lt in itertools.product(*[range(lay.n_aux(k)) for k in range(K)]):
            H = np.array(top + [rows[k][l] for k, l in enumerate(lt)])
            counts[rank_over_field(H, f)] += 1
    return counts


def index_set_bounds(q: int, aux_digits) -> dict:
    """Upper bounds on ``|I_{K+t}|`` and the exact value of ``|I_K|``."""
    K = len(aux_digits)
    tot = sum(aux_digits)
    out = {K: q**tot, 2 * K: q ** (2 * tot)}
    for t in range(1, K):
        s = sum(q ** sum(aux_digits[j] for j in J) for J in itertools.combinations(range(K), t))
        out[K + t] = q**tot * q ** (K * K) * s
    return out


def check_index_sets(q: int, aux_digits) -> CheckResult:
    K = len(aux_digits)
    counts = index_set_counts(q, aux_digits)
    bounds = index_set_bounds(q, aux_digits)
    ok = all(counts[r] == 0 for r in range(K))
    ok &= counts[K] == bounds[K]
    ok &= all(counts[r] <= bounds[r] for r in range(K + 1, 2 * K + 1))
    ok &= sum(counts.values()) == q ** (2 * sum(aux_digits))
    return CheckResult(
        f"index_sets_q{q}_" + "_".join(map(str, aux_digits)), 0.0, 1.0, bool(ok),
        {"counts": {str(k): v for k, v in counts.items()}, "bounds": {str(k): v for k, v in bounds.items()}},
    )


def exact_typical_prob(joint, tilde_p, y_counts, eps: float) -> float:
    """Probability that an i.i.d. ``tilde_p`` sequence is jointly typical with
    a fixed ``y`` sequence having symbol counts ``y_counts``.

    Joint typicality constrains each cell ``(x, y)`` separately, so the
    probability factorizes over the ``y`` classes; each factor sums the
    multinomial over the admissible compositions.
    """
    J = np.asarray(joint, dtype=float)
    tp = np.asarray(tilde_p, dtype=float)
    n = int(sum(y_counts))
    nx = J.shape[0]
    total = 1.0
    for yv, c in enumerate(y_counts):
        acc = 0.0
        for comp in _compositions(int(c), nx):
            N = np.array(comp)
            pc = J[:, yv]
            if np.any(np.abs(N / n - pc) > eps * pc + 1e-12):
                continue
            logm = math.lgamma(c + 1) - sum(math.lgamma(x + 1) for x in comp)
            with np.errstate(divide="ignore"):
                lp = float(np.sum(np.where(N > 0, N * np.log(np.where(tp > 0, tp, 1.0)), 0.0)))
            if np.any((N > 0) & (tp == 0)):
                continue
            acc += math.exp(logm + lp)
        total *= acc
    return total


def _compositions(c: int, parts: int):
    if parts == 1:
        yield (c,)
        return
    for first in range(c + 1):
        for rest in _compositions(c - first, parts - 1):
            yield (first,) + rest


def typical_y_counts(py, n: int, eps: float):
    """Counts of a robustly typical ``y`` sequence closest to ``n p_Y`` (or None)."""
    py = np.asarray(py, dtype=float)
    best = None
    for comp in _compositions(n, py.size):
        N = np.array(comp)
        if np.all(np.abs(N / n - py) <= eps * py + 1e-12):
            dist = float(np.abs(N - n * py).sum())
            if best is None or dist < best[0]:
                best = (dist, comp)
    return None if best is None else best[1]


def check_mismatched(
    joint=((0.2,), (0.8,)), tilde_p=(0.5, 0.5), ns=(8, 16, 24), eps: float = 0.2, samples: int = 100_000,
    seed: int = 0, tol: float = 0.15,
) -> CheckResult:
    """Empirical exponent of ``P{(X~^n, y^n) typical}`` against ``I + D``.

    For each ``n`` a typical ``y^n`` is fixed and i.i.d. ``tilde_p`` sequences
    are drawn. Both the Monte-Carlo estimate and the exact probability are
    reported; the check is on the largest ``n``, where the empirical
    exponent ``-log2 P / n`` must be within ``tol`` of the target.
    """
    J = np.asarray(joint, dtype=float)
    tp = np.asarray(tilde_p, dtype=float)
    target = mismatched_exponent(J, tp)
    per_n = []
    rng = stream(seed, 105)
    for n in ns:
        yc = typical_y_counts(J.sum(axis=0), n, eps)
        if yc is None:
            per_n.append({"n": n, "mc": 0.0, "exact": 0.0, "exponent_mc": math.inf, "exponent_exact": math.inf})
            continue
        y = np.repeat(np.arange(len(yc)), yc)
        X = rng.choice(tp.size, size=(samples, n), p=tp)
        lab = X * J.shape[1] + y[None, :]
        hits = int(_typical_rows(lab, J.ravel(), eps).sum())
        mc = hits / samples
        ex = exact_typical_prob(J, tp, yc, eps)
        per_n.append({
            "n": n, "y_counts": list(map(int, yc)), "hits": hits, "mc": mc, "exact": ex,
            "exponent_mc": -math.log2(mc) / n if mc > 0 else math.inf,
            "exponent_exact": -math.log2(ex) / n if ex > 0 else math.inf,
        })
    last = per_n[-1]
    dev = abs(last["exponent_mc"] - target)
    return CheckResult("mismatched_exponent", dev, 1.0, bool(dev <= tol), {"target": target, "tol": tol, "points": per_n})


def lemma_checks(seed: int = 0, samples: int = 100_000, alpha: float = 0.01) -> dict:
    """Run every ensemble check; the report flags failures rather than raising."""
    results = []
    for q, n in ((2, 6), (3, 4)):
        results.append(check_uniformity(q, n, samples, seed, alpha))
        results.append(check_pairwise(q, n, 3 if q == 2 else 2, samples, seed, alpha))
        results.append(check_full_rank(q, n, 2, samples, seed, alpha))
    results.append(check_index_uniformity(2, 6, (1 / 3, 2 / 3), samples=samples, seed=seed, alpha=alpha))
    results.append(check_index_uniformity(3, 4, (0.25, 0.5, 0.25), (1, 1), (1, 1), samples=samples, seed=seed, alpha=alpha))
    for q, digs in ((2, (2, 2)), (2, (1, 1, 1)), (3, (1, 2)), (2, (1, 3))):
        results.append(check_index_sets(q, digs))
    results.append(check_mismatched(seed=seed))
    return {
        "seed": seed,
        "samples": samples,
        "alpha": alpha,
        "checks": [r.to_json() for r in results],
        "all_passed": all(r.passed for r in results),
    }
