import numpy as np

from cfkit.channel import DiscreteMac
from cfkit.gf import field_new
from cfkit.region import model_from_mac


def random_model(rng, q=2, ny=3, K=2, full_support=True):
    """Random field model: Dirichlet pmfs and a Dirichlet channel over ``F_q^K``."""
    alpha = np.ones(q) if full_support else rng.choice([0.3, 1.0], q)
    pmfs = [rng.dirichlet(alpha) for _ in range(K)]
    pmfs = [np.maximum(p, 1e-3) / np.maximum(p, 1e-3).sum() for p in pmfs]
    cond = rng.dirichlet(np.ones(ny) * 0.7, size=(q,) * K)
    return model_from_mac(DiscreteMac(cond), pmfs, None, field_new(q))


def noiseless_mac(q, K=2):
    """``Y = (U_1, ..., U_K)`` packed into one output symbol."""
    cond = np.zeros((q,) * K + (q**K,))
    for idx in np.ndindex(*(q,) * K):
        cond[idx + (int(np.ravel_multi_index(idx, (q,) * K)),)] = 1.0
    return DiscreteMac(cond)


def h2(p):
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))
