import math

import numpy as np
import pytest
from scipy import stats

from cfkit import channel as ch
from cfkit import simulate as sim
from cfkit.gf import IndexEmbedding, eta, field_new, qary_expand, recompose
from cfkit.prob import is_typical, kl_divergence
from helpers import noiseless_mac

U2 = np.array([0.5, 0.5])


def _code(seed, n=8, q=2, msg=(1, 1), aux=(2, 2)):
    lay = IndexEmbedding(msg, aux, q)
    return sim.codebook_new(rng=np.random.default_rng(seed), n=n, q=q, layout=lay)


def test_snap_rate():
    assert sim.snap_rate(0.45, 12, 2) == pytest.approx(5 / 12)
    assert sim.snap_rate(0.05, 12, 2, "ceil") == pytest.approx(1 / 12)
    assert sim.snap_rate(0.5, 8, 4) == pytest.approx(0.5)
    assert sim.auto_aux_rate([0.5, 0.5], 2) == pytest.approx(0.1)


def test_codebook_deterministic():
    cfg = sim.SimConfig(8, 2, (0.25, 0.25), (0.25, 0.25), (U2, U2), noiseless_mac(2), seed=11)
    a, b = sim.codebook_new(cfg), sim.codebook_new(cfg)
    assert np.array_equal(a.G, b.G) and np.array_equal(a.d, b.d)
    assert a.G.shape == (cfg.layout.kappa, 8)


@pytest.mark.parametrize("q", [2, 3])
def test_linearity_identity(q):
    code = _code(3, n=6, q=q, msg=(1, 1), aux=(1, 2))
    f = field_new(q)
    for k in range(2):
        lay = code.layout
        pairs = [(m, l) for m in range(lay.n_messages(k)) for l in range(lay.n_aux(k))]
        U = code.codewords(k)
        for i, (m, l) in enumerate(pairs):
            assert np.array_equal(U[i], code.codeword(k, m, l))
            for m2, l2 in pairs:
                diff = f.sub(code.codeword(k, m, l), code.codeword(k, m2, l2))
                e = f.sub(eta(m, l, k, lay), eta(m2, l2, k, lay))
                assert np.array_equal(diff, f.dot(e, code.G))


def test_combination_index_identity():
    q = 3
    code = _code(5, n=4, q=q, msg=(1, 1), aux=(1, 1))
    f = field_new(q)
    lay = code.layout
    a = (1, 2)
    for i in range(9):
        for j in range(9):
            m1, l1 = divmod(i, 3)
            m2, l2 = divmod(j, 3)
            v = f.add(f.mul(a[0], eta(m1, l1, 0, lay)), f.mul(a[1], eta(m2, l2, 1, lay)))
            assert sim._combination_keys(code, a, np.array([i]), np.array([j]))[0] == recompose(v, q)


def test_single_codeword_uniform_over_seeds():
    counts = np.zeros(3, dtype=int)
    lay = IndexEmbedding((1,), (1,), 3)
    for s in range(3000):
        code = sim.codebook_new(rng=sim.stream(1, s), n=4, q=3, layout=lay)
        counts += np.bincount(code.codeword(0, 2, 1), minlength=3)
    assert stats.chisquare(counts).pvalue > 0.01


# --- encoder -----------------------------------------------------------------


def _fallback_rate(p, n, aux_digits, eps_prime, trials, seed=0):
    lay = IndexEmbedding((0,), (aux_digits,), 2)
    pmf = np.array([1 - p, p])
    fails = 0
    for t in range(trials):
        code = sim.codebook_new(rng=sim.stream(seed, t, 0), n=n, q=2, layout=lay)
        _, u, found = sim.encode(code, 0, 0, pmf, eps_prime, sim.stream(seed, t, 1))
        if found:
            assert is_typical(u, pmf, eps_prime)
        fails += not found
    return fails / trials


def test_encoder_below_divergence_fails():
    D = kl_divergence([0.15, 0.85], U2)
    rate = sim.snap_rate(0.05, 12, 2, "ceil")
    assert rate < D
    assert _fallback_rate(0.85, 12, round(rate * 12), 0.1, 300) > 0.5
    # a looser slack makes the typical set nonempty; one digit is still far too few
    assert _fallback_rate(0.85, 12, round(rate * 12), 0.2, 300) > 0.5


def test_encoder_above_divergence_covers():
    D = kl_divergence([0.25, 0.75], U2)
    digits = round(sim.snap_rate(D + 0.2, 24, 2, "ceil") * 24)
    assert digits == 10
    assert _fallback_rate(0.75, 24, digits, 0.1, 300) < 0.1
    # one digit short of the target still covers most of the time
    assert _fallback_rate(0.75, 24, 9, 0.1, 300) < 0.1


def test_encoder_uniform_target_improves_with_n():
    # fixed auxiliary rate 1/2
    f8 = _fallback_rate(0.5, 8, 4, 0.1, 400)
    f16 = _fallback_rate(0.5, 16, 8, 0.1, 400)
    assert f16 <= f8 and f16 < 0.01


def test_encoder_random_choice_is_reproducible():
    code = _code(0, n=8, msg=(0, 0), aux=(3, 3))
    a = sim.encode(code, 0, 0, U2, 0.3, sim.stream(4, 1))
    b = sim.encode(code, 0, 0, U2, 0.3, sim.stream(4, 1))
    assert a[0] == b[0] and np.array_equal(a[1], b[1])


# --- decoders ----------------------------------------------------------------


def _noiseless_y(u1, u2, q=2):
    return u1 * q + u2


def test_decode_single_noiseless_typical():
    q, n, eps = 2, 8, 0.5
    joint = np.outer(U2, U2)[..., None] * noiseless_mac(q).cond
    tested = 0
    for s in range(40):
        code = _code(s, n=n, msg=(1, 1), aux=(2, 2))
        r = np.random.default_rng(s)
        m1, m2 = r.integers(2, size=2)
        l1, u1, ok1 = sim.encode(code, 0, int(m1), U2, 0.25, r)
        l2, u2, ok2 = sim.encode(code, 1, int(m2), U2, 0.25, r)
        y = _noiseless_y(u1, u2)
        if not is_typical(np.stack([u1, u2, y], axis=1), joint, eps):
            continue
        tested += 1
        i, j = np.array([m1 * 4 + l1]), np.array([m2 * 4 + l2])
        truth = int(sim._combination_keys(code, (1, 1), i, j)[0])
        try:
            assert sim.decode_single(code, y, (1, 1), eps, joint) == truth
        except sim.DecodeError as e:
            # only a collision of the two codebooks can make this ambiguous
            assert e.kind == "ambiguous"
    assert tested >= 10


def test_decode_pair_noiseless_deep_inside():
    mac = noiseless_mac(2)
    cfg = sim.SimConfig.snapped(16, 2, (0.25, 0.25), (0.25, 0.25), (U2, U2), mac, a=(1, 0), a2=(0, 1), eps=0.8, eps_prime=0.25, trials=200, seed=3)
    assert cfg.layout.aux_digits == (4, 4)
    res = sim.run_trials(cfg)
    assert res["error_rate"] < 0.1


def test_decode_pair_dependent():
    code = _code(0)
    joint = np.outer(U2, U2)[..., None] * noiseless_mac(2).cond
    with pytest.raises(ValueError, match="independent"):
        sim.decode_pair(code, np.zeros(8, int), (1, 1), (1, 1), 0.2, joint)


def test_decode_none_when_nothing_typical():
    code = _code(1)
    joint = np.outer(U2, U2)[..., None] * noiseless_mac(2).cond
    with pytest.raises(sim.DecodeError) as e:
        sim.decode_single(code, np.zeros(8, int), (1, 1), 0.2, joint)
    assert e.value.kind == "none"


def test_budget_error():
    with pytest.raises(sim.BudgetError):
        sim.SimConfig(16, 2, (0.75, 0.75), (0.5, 0.5), (U2, U2), noiseless_mac(2))
    cfg = sim.SimConfig(16, 2, (0.75, 0.75), (0.5, 0.5), (U2, U2), noiseless_mac(2), budget=2**40)
    assert cfg.hypotheses == 2**40


def test_config_validation():
    with pytest.raises(ValueError):
        sim.SimConfig(8, 2, (0.25, 0.25), (0.25, 0.25), (U2, U2), noiseless_mac(2), eps=0.1, eps_prime=0.2)
    with pytest.raises(ValueError):
        sim.SimConfig(8, 2, (0.3, 0.25), (0.25, 0.25), (U2, U2), noiseless_mac(2))
    with pytest.raises(ValueError):
        sim.SimConfig(8, 3, (0.25, 0.25), (0.25, 0.25), (U2, U2), noiseless_mac(2))
    with pytest.raises(ValueError, match="two users"):
        sim.SimConfig(8, 2, (0.25,) * 3, (0.25,) * 3, (U2,) * 3, noiseless_mac(2, 3), a=(1, 1, 1))


def test_run_trials_deterministic_and_parallel(monkeypatch):
    p = np.array([0.3, 0.7])
    cfg = sim.SimConfig.snapped(8, 2, (0.25, 0.25), (0.4, 0.4), (p, p), ch.bmm(), trials=60, seed=9)
    monkeypatch.setenv("CFKIT_THREADS", "1")
    a = sim.run_trials(cfg)
    monkeypatch.setenv("CFKIT_THREADS", "4")
    b = sim.run_trials(cfg)
    assert a == b
    assert a["errors"] == a["none"] + a["ambiguous"] + a["wrong"]


def test_wilson():
    lo, hi = sim.wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-15) and 0.03 < hi < 0.04
    lo, hi = sim.wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    assert isinstance(lo, float)


def test_nonincreasing():
    pt = lambda lo, hi: {"wilson_lo": lo, "wilson_hi": hi}
    assert sim.nonincreasing([pt(0.5, 0.6), pt(0.55, 0.65), pt(0.3, 0.4)])
    assert not sim.nonincreasing([pt(0.1, 0.2), pt(0.3, 0.4)])


# --- ensemble lemmas ---------------------------------------------------------


def test_index_set_counts_exact():
    c = sim.index_set_counts(2, (2, 2))
    assert c[2] == 2 ** (2 + 2)
    assert c == {0: 0, 1: 0, 2: 16, 3: 144, 4: 96}
    assert sum(c.values()) == 2**8
    c3 = sim.index_set_counts(2, (1, 1, 1))
    assert c3[3] == 8 and sum(c3.values()) == 64


@pytest.mark.parametrize("q,digs", [(2, (2, 2)), (2, (1, 1, 1)), (3, (1, 2)), (2, (1, 3))])
def test_index_set_bounds(q, digs):
    assert sim.check_index_sets(q, digs).passed


@pytest.mark.parametrize("q,n", [(2, 6), (3, 4)])
def test_chi_square_checks(q, n):
    for check in (sim.check_uniformity, sim.check_full_rank):
        r = check(q, n, samples=100_000, seed=7)
        assert r.passed, r
    r = sim.check_pairwise(q, n, 3 if q == 2 else 2, samples=100_000, seed=7)
    assert r.passed, r


def test_index_uniformity():
    r = sim.check_index_uniformity(samples=100_000, seed=7)
    assert r.passed and r.info["typical_fraction"] > 0.5


def test_exact_typical_prob_bruteforce():
    J = np.array([[0.1, 0.2], [0.3, 0.4]])
    tp = np.array([0.6, 0.4])
    yc = (2, 3)
    y = np.repeat([0, 1], yc)
    total = 0.0
    for bits in range(2**5):
        x = np.array(qary_expand(bits, 5, 2))
        if is_typical(np.stack([x, y], axis=1), J, 0.5):
            total += math.prod(tp[v] for v in x)
    assert sim.exact_typical_prob(J, tp, yc, 0.5) == pytest.approx(total, abs=1e-15)


def test_mismatched_check():
    r = sim.check_mismatched(seed=7)
    assert r.info["target"] == pytest.approx(kl_divergence([0.2, 0.8], U2))
    last = r.info["points"][-1]
    assert last["n"] == 24
    assert abs(last["exponent_mc"] - last["exponent_exact"]) < 0.02
    assert r.passed
