import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfkit.translate import TranslationPlan, min_prime_q, plan_for, verify_translation

PAM = [-3, -1, 1, 3]


def test_min_prime_examples():
    plan = min_prime_q([1, 1], [PAM, PAM])
    assert plan.q == 37 and plan.Gamma == 3 and plan.coeff_bound == 1
    assert min_prime_q([1, 1], [[0, 1], [0, 1]]).q == 5
    plan = min_prime_q([0, 0], [[0, 2], [1]])
    assert plan.coeff_bound == 0 and plan.q == min_prime_q([1, 1], [[0, 2], [1]]).q


def test_empty_alphabet():
    with pytest.raises(ValueError):
        min_prime_q([1, 1], [[], [1]])


def test_verify_examples():
    plan = min_prime_q([1, 1], [PAM, PAM])
    assert verify_translation(plan, [1, 1], [PAM, PAM])
    assert not verify_translation(TranslationPlan(7, 3, 1, 2), [1, 1], [PAM, PAM])
    for q in (3, 5, 11):
        assert verify_translation(TranslationPlan(q, 0, 1, 2), [1, 1], [[0], [0]])


def test_plan_for_rejects_small_or_composite():
    with pytest.raises(ValueError):
        plan_for(31, [1, 1], [PAM, PAM])
    with pytest.raises(ValueError):
        plan_for(39, [1, 1], [PAM, PAM])
    assert plan_for(41, [1, 1], [PAM, PAM]).q == 41


def test_residue_roundtrip():
    plan = min_prime_q([2, -1], [PAM, PAM])
    x = np.arange(-plan.limit, plan.limit + 1)
    assert np.array_equal(plan.to_int(plan.to_field(x)), x)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_plans_verify(K, data):
    alph = [data.draw(st.lists(st.integers(-5, 5), min_size=1, max_size=3, unique=True)) for _ in range(K)]
    a = data.draw(st.lists(st.integers(-4, 4), min_size=K, max_size=K))
    plan = min_prime_q(a, alph)
    assert verify_translation(plan, a, alph)


@settings(max_examples=60)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 4), st.integers(0, 4))
def test_monotone(g1, g2, c1, c2):
    q1 = min_prime_q([c1, 1], [[min(g1, g2)], [0]]).q
    q2 = min_prime_q([max(c1, c2), 1], [[max(g1, g2)], [0]]).q
    assert q2 >= q1
