"""Parameter search: input pmfs, scale factors and coefficient vectors.

Every search is a grid followed by a bounded golden-section refinement of
the best cell. Grid points may be evaluated on a thread pool; the argmax
picks the first index among equal values so serial and parallel runs agree.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import channel as ch
from . import region as rg
from .gf import field_new
from .translate import min_prime_q

TIE = 1e-12


@dataclass(frozen=True)
class SearchSpec:
    """What to search over and what to maximize.

    Parameters
    ----------
    family : {"bern", "ternary", "fixed"}
        One-parameter pmf family. ``bern`` is ``(1-p, p)``; ``ternary`` is
        ``((1-p)/2, p, (1-p)/2)`` on ``{-1, 0, 1}``.
    step : float
        Grid resolution for the family parameter.
    lo, hi : float
        Parameter range. ``hi`` is excluded for ``ternary`` since ``p = 1``
        leaves no power.
    refine : bool
        Golden-section refinement around the best grid point.
    beta_step, beta_lo, beta_hi : float
        Grid over the ratio ``beta_2 / beta_1``.
    candidates : sequence of coefficient pairs, optional
    objective : {"symmetric", "sum", "classical"}
    """

    family: str = "bern"
    step: float = 1e-3
    lo: float = 0.0
    hi: float = 1.0
    refine: bool = True
    beta_step: float = 0.05
    beta_lo: float = 0.2
    beta_hi: float = 3.0
    candidates: tuple = ()
    objective: str = "symmetric"

    def __post_init__(self):
        if self.step <= 0 or self.beta_step <= 0:
            raise ValueError("grid resolutions must be positive")
        if not self.hi > self.lo or not self.beta_hi >= self.beta_lo:
            raise ValueError("empty search range")
        if self.family not in ("bern", "ternary", "fixed"):
            raise ValueError(f"unknown pmf family {self.family!r}")
        if self.objective not in ("symmetric", "sum", "classical"):
            raise ValueError(f"unknown objective {self.objective!r}")

    def grid(self) -> np.ndarray:
        n = int(round((self.hi - self.lo) / self.step))
        g = self.lo + self.step * np.arange(n + 1)
        if self.family == "ternary":
            g = g[g < 1.0 - 1e-12]
        return g

    def beta_grid(self) -> np.ndarray:
        n = int(round((self.beta_hi - self.beta_lo) / self.beta_step))
        return self.beta_lo + self.beta_step * np.arange(n + 1)


@dataclass
class Optimum:
    params: dict
    rate: float
    grid_rate: float
    details: dict = field(default_factory=dict)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("CFKIT_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable, items: Sequence) -> list:
    """Ordered map, on a thread pool when ``CFKIT_THREADS`` > 1."""
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def first_argmax(values) -> int:
    v = np.asarray(values, dtype=float)
    best = np.nanmax(v)
    return int(np.flatnonzero(v >= best - TIE)[0])


def grid_refine(fn: Callable[[float], float], grid, refine: bool = True, bounds=None):
    """Maximize ``fn`` over ``grid`` then polish inside the neighbouring cells.

    Returns ``(x, value, grid_value)``; ``value >= grid_value`` always.
    """
    grid = np.asarray(grid, dtype=float)
    vals = pmap(fn, list(grid))
    i = first_argmax(vals)
    x, v = float(grid[i]), float(vals[i])
    if not refine or grid.size < 2:
        return x, v, v
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if bounds is not None:
        lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
    if hi <= lo:
        return x, v, v
    res = minimize_scalar(lambda t: -fn(float(t)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    if -res.fun > v:
        return float(res.x), float(-res.fun), v
    return x, v, v


# ---------------------------------------------------------------------------
# rate objectives on a finite model
# ---------------------------------------------------------------------------


def _cf_bounds(model: rg.FiniteModel, a) -> tuple:
    icf = model.icf(a)
    out = []
    for k in range(2):
        zero = int(a[k]) % model.field.q == 0 if model.field is not None and model.field.is_prime else int(a[k]) == 0
        out.append(model.I_given_rest(k) if zero else icf[k])
    return tuple(out)


def model_rates(model: rg.FiniteModel, a, bset=None) -> dict:
    """Symmetric and sum rate of ``R_CF(a)`` union ``R_LMAC`` without building polytopes."""
    c1, c2 = _cf_bounds(model, a)
    m1, _ = rg.lmac_bound(model, 0, bset)
    m2, _ = rg.lmac_bound(model, 1, bset)
    I1, I2, I12 = model.I_given_rest(0), model.I_given_rest(1), model.I_all
    sym_cf = min(c1, c2) if min(c1, c2) > 0 else 0.0
    sym_l1 = min(m1, I2, I12 / 2) if m1 > 0 else 0.0
    sym_l2 = min(I1, m2, I12 / 2) if m2 > 0 else 0.0
    sum_cf = c1 + c2 if min(c1, c2) > 0 else 0.0
    sum_l1 = min(m1 + I2, I12) if m1 > 0 else 0.0
    sum_l2 = min(I1 + m2, I12) if m2 > 0 else 0.0
    return {
        "symmetric": max(sym_cf, sym_l1, sym_l2, 0.0),
        "sum": max(sum_cf, sum_l1, sum_l2, 0.0),
        "classical": max(0.0, min(I1, I2, I12 / 2)),
        "cf": (c1, c2),
        "lmac": (m1, m2),
        "mac": (I1, I2, I12),
    }


def family_pmf(spec: SearchSpec, p: float) -> np.ndarray:
    if spec.family == "bern":
        return np.array([1.0 - p, p])
    if spec.family == "ternary":
        return np.array([(1.0 - p) / 2, p, (1.0 - p) / 2])
    raise ValueError("fixed family has no parameter")


def optimize_symmetric_rate(mac: ch.DiscreteMac, spec: SearchSpec | None = None, a=(1, 1), q: int = 2) -> Optimum:
    """Best symmetric rate over a one-parameter family with ``p_1 = p_2 = p``.

    Parameters
    ----------
    mac : DiscreteMac
        Channel over ``F_q`` inputs.
    spec : SearchSpec
        ``objective="classical"`` uses ``min(I1, I2, I12/2)`` of the i.i.d.
        MAC pentagon instead of the compute-forward region.
    """
    spec = spec or SearchSpec()
    f = field_new(q)
    if spec.family != "bern" and q != 3:
        raise ValueError("the family does not match the field order")
    objective = "symmetric" if spec.objective == "sum" else spec.objective

    def value(p: float) -> float:
        pm = family_pmf(spec, min(max(p, 0.0), 1.0))
        if np.any(pm <= 0) and spec.objective == "classical":
            return 0.0
        model = rg.model_from_mac(mac, [pm, pm], None, f)
        if len(model.supports[0]) < f.q:
            # a degenerate input carries nothing
            return 0.0
        return model_rates(model, a)[objective]

    x, v, gv = grid_refine(value, spec.grid(), spec.refine, (spec.lo, spec.hi))
    return Optimum({"p": x}, v, gv)


# ---------------------------------------------------------------------------
# Gaussian families
# ---------------------------------------------------------------------------


def db_to_power(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def cor1_sum_rate(P: float, beta=(1.0, 1.0), a=(1, 1), h=(1.0, 1.0), bmax: int = 8) -> float:
    return rg.max_sum_rate(rg.region_cor1(h, P, beta, a, bmax))


def cor1_best_beta(P: float, spec: SearchSpec | None = None, a=(1, 1), h=(1.0, 1.0)) -> Optimum:
    """Search ``beta_2 / beta_1`` (the region only depends on the ratio)."""
    spec = spec or SearchSpec()
    fn = lambda r: cor1_sum_rate(P, (1.0, r), a, h)
    x, v, gv = grid_refine(fn, spec.beta_grid(), spec.refine, (spec.beta_lo, spec.beta_hi))
    return Optimum({"beta": (1.0, x)}, v, gv)


def _gauss_model_rate(P: float, supports, pmfs, maps, a, kind: str, q: int | None = None):
    mac = ch.GaussianMac((1.0, 1.0), (P, P))
    quant = ch.OutputQuantizer.for_levels(np.add.outer(maps[0], maps[1]).ravel())
    if kind == "field":
        model = rg.model_from_mac(mac, pmfs, maps, q, quant)
        bset = rg.b_candidates(model)
    else:
        alph = [np.asarray(s)[np.asarray(p) > 0] for s, p in zip(supports, pmfs)]
        plan = min_prime_q(a, alph)
        model = rg.integer_model(mac, supports, pmfs, maps, quant, plan)
        a = [int(x) % plan.q for x in a]
        bset = rg.b_candidates(model)
    return model_rates(model, a, bset)


PAM4 = np.array([-3, -1, 1, 3])


def thm2_pam4_sum(P: float) -> float:
    x = PAM4 * math.sqrt(P / 5.0)
    u = np.ones(4) / 4
    return _gauss_model_rate(P, [PAM4, PAM4], [u, u], [x, x], (1, 1), "int")["sum"]


def thm1_q2_sum(P: float) -> float:
    x = np.array([-1.0, 1.0]) * math.sqrt(P)
    u = np.array([0.5, 0.5])
    return _gauss_model_rate(P, None, [u, u], [x, x], (1, 1), "field", 2)["sum"]


def thm1_q4_sum(P: float) -> float:
    x = PAM4 * math.sqrt(P / 5.0)
    u = np.ones(4) / 4
    return _gauss_model_rate(P, None, [u, u], [x, x], (1, 1), "field", 4)["sum"]


def ternary_sum(P: float, p: float) -> float:
    """Integer-combination sum rate for ``((1-p)/2, p, (1-p)/2)`` on ``{-1, 0, 1}``."""
    if not 0.0 <= p < 1.0:
        return 0.0
    vals = np.array([-1, 0, 1])
    pm = np.array([(1 - p) / 2, p, (1 - p) / 2])
    x = vals * math.sqrt(P / (1.0 - p))
    return _gauss_model_rate(P, [vals, vals], [pm, pm], [x, x], (1, 1), "int")["sum"]


def ternary_best(P: float, spec: SearchSpec | None = None) -> Optimum:
    spec = spec or SearchSpec(family="ternary")
    x, v, gv = grid_refine(lambda p: ternary_sum(P, p), spec.grid(), spec.refine, (spec.lo, spec.hi - 1e-9))
    return Optimum({"p": x}, v, gv)


def upper_bound(P: float) -> float:
    return math.log2(1.0 + P)


def iid_sum(P: float) -> float:
    return 0.5 * math.log2(1.0 + 2.0 * P)


FIG4_COLUMNS = ("snr_db", "upper", "cor1", "thm2", "thm1_q2", "thm1_q4", "iid")
FIG5_COLUMNS = ("snr_db", "p", "thm2", "cor1", "iid")


def fig4_row(snr_db: float) -> dict:
    P = db_to_power(snr_db)
    return {
        "snr_db": snr_db,
        "upper": upper_bound(P),
        "cor1": cor1_sum_rate(P),
        "thm2": thm2_pam4_sum(P),
        "thm1_q2": thm1_q2_sum(P),
        "thm1_q4": thm1_q4_sum(P),
        "iid": iid_sum(P),
    }


def fig5_row(snr_db: float, spec: SearchSpec | None = None) -> dict:
    P = db_to_power(snr_db)
    best = ternary_best(P, spec)
    return {"snr_db": snr_db, "p": best.params["p"], "thm2": best.rate, "cor1": cor1_sum_rate(P), "iid": iid_sum(P)}


def fig4_grid(n: int = 40) -> np.ndarray:
    return np.linspace(-5.0, 15.0, n)


def fig5_grid(n: int = 40) -> np.ndarray:
    return np.linspace(1.0, 3.0, n)


def optimize_sum_rate(snrs, row: Callable[[float], dict] = fig4_row) -> list:
    """Evaluate a per-SNR optimizer over a grid; rows keep the grid order."""
    return pmap(row, [float(s) for s in snrs])


# ---------------------------------------------------------------------------
# coefficient choice
# ---------------------------------------------------------------------------


def canonical(a) -> tuple:
    """gcd-reduced with the first nonzero entry positive."""
    a = [int(x) for x in a]
    if all(x == 0 for x in a):
        raise ValueError("zero coefficient vector")
    g = math.gcd(*[abs(x) for x in a])
    a = [x // g for x in a]
    s = next(x for x in a if x != 0)
    return tuple(x if s > 0 else -x for x in a)


def computation_sum(icf, a=None) -> float:
    """Sum of the positive ``I_CF,k`` over users that enter the combination."""
    if a is None:
        a = [1] * len(icf)
    return float(sum(max(v, 0.0) for v, c in zip(icf, a) if int(c) != 0))


def best_coefficients(channel, pmfs=None, candidates=None, beta=(1.0, 1.0), score: Callable | None = None):
    """Exhaustive argmax of the computation sum rate over coefficient vectors.

    Parameters
    ----------
    channel : GaussianMac or FiniteModel
        For a Gaussian MAC the auxiliaries are Gaussian and the closed form is
        used (``pmfs`` is ignored). A :class:`FiniteModel` is scored with
        ``H(U_k) - H(W_a|Y)``.
    candidates : iterable of integer vectors
    score : callable, optional
        Maps ``(icf, a)`` to the objective. Defaults to
        :func:`computation_sum`, which ignores users with ``a_k = 0``.

    Returns
    -------
    (a, objective)
        Candidates are canonicalized first; among equal objectives (within
        ``1e-12``) the lexicographically smallest canonical vector wins.
    """
    cands = sorted({canonical(c) for c in (candidates or [])})
    if not cands:
        raise ValueError("empty candidate set")
    score = score or computation_sum
    if isinstance(channel, ch.GaussianMac):
        P = channel.power if channel.power[0] != channel.power[1] else channel.power[0]
        evals = [score(rg.gaussian_icf(channel.h, P, beta, c), c) for c in cands]
    elif isinstance(channel, rg.FiniteModel):
        evals = [score(channel.icf(c), c) for c in cands]
    else:
        raise TypeError("channel must be a GaussianMac or a FiniteModel")
    i = first_argmax(evals)
    return cands[i], float(evals[i])


def coefficient_box(amax: int, K: int = 2) -> list:
    rng = range(-amax, amax + 1)
    out = [(x,) for x in rng]
    for _ in range(K - 1):
        out = [o + (y,) for o in out for y in rng]
    return [o for o in out if any(o)]
