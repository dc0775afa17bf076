"""Discrete memoryless MACs, symbol mappings, the Gaussian MAC and its
output quantizer."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

POWER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteMac:
    """Conditional law ``P(y | x_1, ..., x_K)``.

    ``cond`` has shape ``(|X_1|, ..., |X_K|, |Y|)``.
    """

    cond: np.ndarray

    def __post_init__(self):
        c = np.array(self.cond, dtype=float)
        if c.ndim < 2:
            raise ValueError("cond needs at least one input axis and an output axis")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("conditional probabilities must be finite and nonnegative")
        dev = np.abs(c.sum(axis=-1) - 1.0).max()
        if dev > 1e-12:
            raise ValueError(f"a conditional slice sums to 1{dev:+.3e}")
        c.setflags(write=False)
        object.__setattr__(self, "cond", c)

    @property
    def K(self) -> int:
        return self.cond.ndim - 1

    @property
    def inputs(self) -> tuple:
        return self.cond.shape[:-1]

    @property
    def output(self) -> int:
        return self.cond.shape[-1]

    def to_json(self) -> dict:
        return {
            "type": "dm_mac",
            "K": self.K,
            "inputs": list(self.inputs),
            "output": self.output,
            "cond": self.cond.ravel().tolist(),
        }


@dataclass(frozen=True)
class GaussianMac:
    """``Y = sum_k h_k X_k + Z`` with unit-variance noise."""

    h: tuple
    power: tuple

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        p = tuple(float(x) for x in self.power)
        if len(h) != len(p):
            raise ValueError("one gain per power constraint")
        if min(p) <= 0:
            raise ValueError("powers must be positive")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "power", p)

    @property
    def K(self) -> int:
        return len(self.h)

    def to_json(self) -> dict:
        return {"type": "gaussian_mac", "h": list(self.h), "power": list(self.power)}


@dataclass(frozen=True)
class OutputQuantizer:
    """Uniform quantizer with step ``1/sqrt(j)`` and ``2j+1`` bins on ``[-sqrt(j), sqrt(j)]``.

    Points are mapped to the nearest of ``k * delta``; the two end bins absorb
    the tails. Bin midpoints fall in the upper bin.
    """

    j: int

    def __post_init__(self):
        if int(self.j) < 1:
            raise ValueError("j must be a positive integer")

    @property
    def delta(self) -> float:
        return 1.0 / math.sqrt(self.j)

    @property
    def bins(self) -> int:
        return 2 * self.j + 1

    @property
    def edges(self) -> np.ndarray:
        return (np.arange(-self.j, self.j) + 0.5) * self.delta

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.j, self.j + 1) * self.delta

    def quantize(self, y) -> np.ndarray:
        """Bin index of each real sample."""
        return np.searchsorted(self.edges, np.asarray(y), side="right")

    def bin_probs(self, means) -> np.ndarray:
        """``P(bin | mean)`` for unit-variance Gaussians, shape ``(len(means), bins)``."""
        m = np.asarray(means, dtype=float).ravel()
        cdf = norm.cdf(self.edges[None, :] - m[:, None])
        z = np.zeros((m.size, 1))
        o = np.ones((m.size, 1))
        return np.diff(np.concatenate([z, cdf, o], axis=1), axis=1)

    @classmethod
    def for_levels(cls, levels, minimum: int = 400, spread: float = 8.0) -> "OutputQuantizer":
        """Default resolution: range covers the largest mean plus ``spread`` noise deviations."""
        top = float(np.max(np.abs(levels))) if np.size(levels) else 0.0
        return cls(max(minimum, int(math.ceil((top + spread) ** 2))))


def check_power(pmf, values, P: float) -> float:
    """Average power of a mapping under ``pmf``; raise if it exceeds ``P``."""
    e = float(np.dot(np.asarray(pmf, dtype=float), np.asarray(values, dtype=float) ** 2))
    if e > P + POWER_TOL:
        raise ValueError(f"mapping uses power {e:.12g} > {P:.12g}")
    return e


def gaussian_levels(mac: GaussianMac, maps) -> np.ndarray:
    """Noise-free output ``sum_k h_k x_k(u_k)`` on the grid of input tuples."""
    if len(maps) != mac.K:
        raise ValueError("one mapping per user required")
    grids = np.meshgrid(*[np.asarray(m, dtype=float) for m in maps], indexing="ij")
    return sum(h * g for h, g in zip(mac.h, grids))


def induced_channel(mac, maps, quantizer: OutputQuantizer | None = None) -> DiscreteMac:
    """Channel seen by the auxiliaries, ``P(y | x_1(u_1), ..., x_K(u_K))``.

    Parameters
    ----------
    mac : DiscreteMac or GaussianMac
    maps : sequence of arrays
        ``maps[k][u]`` is the input symbol (index for a discrete MAC, real
        amplitude for a Gaussian MAC) sent for auxiliary symbol ``u``.
    quantizer : OutputQuantizer, optional
        Gaussian outputs only. Defaults to :meth:`OutputQuantizer.for_levels`.
    """
    if isinstance(mac, DiscreteMac):
        if len(maps) != mac.K:
            raise ValueError("one mapping per user required")
        idx = []
        for k, m in enumerate(maps):
            m = np.asarray(m)
            if m.size and (m.min() < 0 or m.max() >= mac.inputs[k]):
                raise ValueError(f"mapping {k} leaves the input alphabet")
            idx.append(m.astype(np.int64))
        grids = np.meshgrid(*idx, indexing="ij")
        return DiscreteMac(mac.cond[tuple(grids)])
    if isinstance(mac, GaussianMac):
        lev = gaussian_levels(mac, maps)
        if quantizer is None:
            quantizer = OutputQuantizer.for_levels(lev)
        P = quantizer.bin_probs(lev)
        return DiscreteMac(P.reshape(lev.shape + (quantizer.bins,)))
    raise TypeError(f"unsupported channel type {type(mac).__name__}")


def sample(mac: DiscreteMac, inputs, rng: np.random.Generator) -> np.ndarray:
    """Draw outputs for input index arrays (one array per user, same shape)."""
    ins = tuple(np.asarray(x, dtype=np.int64) for x in inputs)
    if len(ins) != mac.K:
        raise ValueError("one input array per user required")
    rows = mac.cond[ins]
    cdf = np.cumsum(rows, axis=-1)
    r = rng.random(rows.shape[:-1])
    out = (cdf < r[..., None]).sum(axis=-1)
    return np.minimum(out, mac.output - 1)


def bmm() -> DiscreteMac:
    """Binary multiplying MAC ``Y = X_1 X_2``."""
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = c[0, 1, 0] = c[1, 0, 0] = 1.0
    c[1, 1, 1] = 1.0
    return DiscreteMac(c)


def builtin(name: str, **params):
    """Named models: ``bmm``, ``sym_gaussian(P)``, ``example4(P1, P2, h)``.

    ``example4`` returns the pair of Gaussian MACs seen by the two receivers.
    """
    if name == "bmm":
        return bmm()
    if name == "sym_gaussian":
        P = float(params.get("P", 1.0))
        return GaussianMac((1.0, 1.0), (P, P))
    if name == "example4":
        P1 = float(params.get("P1", 25.0))
        P2 = float(params.get("P2", 18.0))
        h = float(params.get("h", math.sqrt(2.0)))
        return GaussianMac((1.0, h), (P1, P2)), GaussianMac((1.0, 1.0), (P1, P2))
    raise ValueError(f"unknown builtin channel {name!r}")


def channel_from_json(d) -> DiscreteMac | GaussianMac:
    """Parse a channel spec (dict or JSON text)."""
    if isinstance(d, str):
        d = json.loads(d)
    t = d.get("type")
    if t == "dm_mac":
        shape = tuple(int(x) for x in d["inputs"]) + (int(d["output"]),)
        if int(d["K"]) != len(shape) - 1:
            raise ValueError("K does not match the number of input alphabets")
        cond = np.array(d["cond"], dtype=float)
        if cond.size != math.prod(shape):
            raise ValueError(f"cond has {cond.size} entries, expected {math.prod(shape)}")
        return DiscreteMac(cond.reshape(shape))
    if t == "gaussian_mac":
        return GaussianMac(tuple(d["h"]), tuple(d["power"]))
    raise ValueError(f"unknown channel type {t!r}")


def channel_to_json(ch) -> str:
    return json.dumps(ch.to_json())
