import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from cfkit.channel import (
    DiscreteMac,
    GaussianMac,
    OutputQuantizer,
    bmm,
    builtin,
    channel_from_json,
    channel_to_json,
    check_power,
    induced_channel,
    sample,
)
from cfkit.prob import mutual_information


def _mi_uniform(cond):
    K = cond.ndim - 1
    pu = np.full(cond.shape[:-1], 1.0 / np.prod(cond.shape[:-1]))
    J = pu[..., None] * cond
    return mutual_information(J, list(range(K)), K)


def _antipodal_mi_quad(P):
    # Y = x1 + x2 + Z with x in {-sqrt P, sqrt P} equiprobable
    s = math.sqrt(P)
    means, w = np.array([-2 * s, 0.0, 2 * s]), np.array([0.25, 0.5, 0.25])

    def f(y):
        p = float(np.dot(w, stats.norm.pdf(y - means)))
        return -p * math.log2(p) if p > 0 else 0.0

    hY, _ = integrate.quad(f, -2 * s - 12, 2 * s + 12, limit=400, epsabs=1e-12)
    return hY - 0.5 * math.log2(2 * math.pi * math.e)


def test_bmm_tensor():
    c = bmm().cond
    for x1 in range(2):
        for x2 in range(2):
            assert c[x1, x2, x1 * x2] == 1.0


def test_identity_maps_keep_tensor():
    rng = np.random.default_rng(0)
    cond = rng.dirichlet(np.ones(3), size=(2, 3))
    mac = DiscreteMac(cond)
    assert np.array_equal(induced_channel(mac, [np.arange(2), np.arange(3)]).cond, mac.cond)


def test_relabeling_commutes():
    rng = np.random.default_rng(1)
    mac = DiscreteMac(rng.dirichlet(np.ones(4), size=(3, 3)))
    perm = np.array([2, 0, 1])
    a = induced_channel(mac, [perm, np.arange(3)]).cond
    b = induced_channel(mac, [np.arange(3), np.arange(3)]).cond[perm]
    assert np.array_equal(a, b)


def test_bad_cond_and_maps():
    with pytest.raises(ValueError):
        DiscreteMac(np.full((2, 2, 2), 0.6))
    with pytest.raises(ValueError):
        induced_channel(bmm(), [[0, 2], [0, 1]])


def test_quantized_gaussian_mi_close_to_quadrature():
    mac = GaussianMac((1.0, 1.0), (1.0, 1.0))
    q = OutputQuantizer(400)
    ind = induced_channel(mac, [[-1.0, 1.0], [-1.0, 1.0]], q)
    assert ind.output == 801
    assert np.allclose(ind.cond.sum(-1), 1.0, atol=1e-12)
    assert abs(_mi_uniform(ind.cond) - _antipodal_mi_quad(1.0)) < 1e-3


@pytest.mark.parametrize("P", [0.3, 3.0, 30.0])
def test_quantizer_resolution_monotone(P):
    s = math.sqrt(P)
    mac = GaussianMac((1.0, 1.0), (P, P))
    prev = -1.0
    vals = []
    for j in (100, 400, 800):
        v = _mi_uniform(induced_channel(mac, [[-s, s], [-s, s]], OutputQuantizer(j)).cond)
        vals.append(v)
        assert v >= prev - 1e-9
        prev = v
    assert abs(vals[2] - vals[1]) < 1e-3


def test_quantizer_geometry():
    q = OutputQuantizer(16)
    assert q.delta == 0.25 and q.bins == 33
    assert q.quantize([-100.0, 0.0, 0.125, 100.0]).tolist() == [0, 16, 17, 32]
    assert OutputQuantizer.for_levels([-2.0, 2.0]).j == 400
    assert OutputQuantizer.for_levels([-30.0, 30.0]).j == 38**2


def test_power_check():
    assert check_power([0.5, 0.5], [-1, 1], 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        check_power([0.5, 0.5], [-1.1, 1.1], 1.0)


def test_sample_deterministic_channel():
    rng = np.random.default_rng(0)
    x1 = rng.integers(0, 2, 1000)
    x2 = rng.integers(0, 2, 1000)
    assert np.array_equal(sample(bmm(), [x1, x2], rng), x1 * x2)


def test_sample_uniform_chisquare():
    mac = DiscreteMac(np.full((1, 1, 4), 0.25))
    y = sample(mac, [np.zeros(100_000, int), np.zeros(100_000, int)], np.random.default_rng(11))
    counts = np.bincount(y, minlength=4)
    assert stats.chisquare(counts).pvalue > 0.001
    assert np.all(np.abs(counts - 25_000) < 3 * math.sqrt(100_000 * 0.25 * 0.75))


def test_sample_reproducible():
    mac = DiscreteMac(np.random.default_rng(2).dirichlet(np.ones(3), size=(2, 2)))
    x = [np.zeros(50, int), np.ones(50, int)]
    a = sample(mac, x, np.random.default_rng(5))
    b = sample(mac, x, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_builtins():
    assert np.array_equal(builtin("bmm").cond, bmm().cond)
    g = builtin("sym_gaussian", P=1.0)
    assert g.h == (1.0, 1.0) and g.power == (1.0, 1.0)
    r1, r2 = builtin("example4")
    assert r1.h == (1.0, math.sqrt(2)) and r1.power == (25.0, 18.0)
    assert r2.h == (1.0, 1.0) and r2.power == r1.power
    with pytest.raises(ValueError):
        builtin("nope")


def test_json_roundtrip_bit_exact():
    mac = DiscreteMac(np.random.default_rng(4).dirichlet(np.ones(3), size=(2, 2)))
    back = channel_from_json(channel_to_json(mac))
    assert np.array_equal(back.cond, mac.cond)
    g = GaussianMac((1.0, math.sqrt(2)), (25.0, 18.0))
    assert channel_from_json(json.loads(channel_to_json(g))) == g
    text = '{"type":"gaussian_mac","h":[1.0,1.4142135623730951],"power":[25,18]}'
    assert channel_from_json(text).h[1] == math.sqrt(2)


def test_json_errors():
    with pytest.raises(ValueError):
        channel_from_json({"type": "dm_mac", "K": 2, "inputs": [2, 2], "output": 2, "cond": [1, 0]})
    with pytest.raises(ValueError):
        channel_from_json({"type": "awgn"})
