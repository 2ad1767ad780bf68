import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agppo import appraisal as ap
from agppo.errors import ValidationError


def entropy_oracle(p):
    return -sum(x * math.log(x) for x in p if x > 0)


def test_motivational_relevance_values():
    assert ap.motivational_relevance((0, 0), (9, 9), 10) == pytest.approx(1 - 17 / 18, abs=1e-12)
    assert ap.motivational_relevance((4, 4), (4, 5), 10) == 1.0
    assert ap.motivational_relevance((2, 3), (5, 7), 10) == pytest.approx(2 / 3, abs=1e-12)


def test_motivational_relevance_clamps_at_goal():
    assert ap.motivational_relevance((3, 3), (3, 3), 10) == 1.0


@pytest.mark.parametrize(
    "p,expected",
    [
        ((1, 0, 0), 1.0),
        ((1 / 3, 1 / 3, 1 / 3), 1 - math.log(3) / (1 + math.log(3))),
        ((0.7, 0.2, 0.1), 1 - entropy_oracle((0.7, 0.2, 0.1)) / (1 + entropy_oracle((0.7, 0.2, 0.1)))),
    ],
)
def test_certainty(p, expected):
    assert ap.certainty(p) == pytest.approx(expected, abs=1e-12)


def test_certainty_reference_numbers():
    assert ap.certainty((1 / 3, 1 / 3, 1 / 3)) == pytest.approx(0.4765, abs=1e-4)
    assert ap.certainty((0.7, 0.2, 0.1)) == pytest.approx(0.5550, abs=1e-4)


def test_novelty():
    assert ap.novelty((1 / 3, 1 / 3, 1 / 3)) == pytest.approx(0.0, abs=1e-12)
    kl = sum(1 / 3 * math.log((1 / 3) / p) for p in (0.7, 0.2, 0.1))
    assert ap.novelty((0.7, 0.2, 0.1)) == pytest.approx(kl / (1 + kl), abs=1e-12)
    assert ap.novelty((0.7, 0.2, 0.1)) == pytest.approx(0.2449, abs=1e-4)


def test_novelty_near_deterministic_is_below_one():
    v = ap.novelty((1.0, 0.0, 0.0))
    kl = (math.log(1 / 3) + 2 * math.log((1 / 3) / 1e-6)) / 3
    assert v == pytest.approx(kl / (1 + kl), abs=1e-12)
    assert 0.85 < v < 1.0


@pytest.mark.parametrize("bad", [(0.5, 0.6, 0.1), (-0.1, 0.6, 0.5), ()])
def test_policy_appraisals_reject_non_simplex(bad):
    with pytest.raises(ValidationError):
        ap.certainty(bad)
    with pytest.raises(ValidationError):
        ap.novelty(bad)


def test_goal_congruence():
    assert ap.goal_congruence((0, 0), (1, 1), False, 7) == 0.0
    assert ap.goal_congruence((4, 4), (4, 4), True, 7) == 1.0
    assert ap.goal_congruence((0, 0), (2, 3), True, 7) == pytest.approx(1 - math.sqrt(13) / math.sqrt(58), abs=1e-12)
    assert ap.goal_congruence((0, 0), (2, 3), True, 7) == pytest.approx(0.5266, abs=1e-4)


def test_goal_congruence_denominator():
    # distance sqrt(58) sits exactly at zero congruence
    assert ap.goal_congruence((0, 0), (3, 7), True, 7) == pytest.approx(0.0, abs=1e-12)


def test_coping_potential():
    assert ap.coping_potential(0, 7) == 1.0
    assert ap.coping_potential(3, 7) == pytest.approx(1 - 3 / (7 + 1e-6), abs=1e-12)
    assert ap.coping_potential(3, 7) == pytest.approx(0.5714, abs=1e-4)
    assert ap.coping_potential(5, 5) == pytest.approx(1 - 5 / 5.000001, abs=1e-15)
    assert ap.coping_potential(5, 5) == pytest.approx(2e-7, rel=1e-3)
    assert ap.coping_potential(0, 0) == 1.0
    with pytest.raises(ValidationError):
        ap.coping_potential(4, 3)


def test_anticipation():
    assert ap.anticipation(0.3, 0.3) == 1.0
    assert ap.anticipation(1.0, 0.25) == pytest.approx(0.25)
    assert ap.anticipation(-1.0, 1.0) == 0.0
    assert ap.anticipation(-1.0, None) == 0.5


def test_compute_all_compositions():
    z = ap.compute_all((4, 4), (4, 3), True, 0, 0, (1, 0, 0), 0.0, 0.0)
    assert (z.mr, z.certainty, z.cp, z.anticipation) == (1.0, 1.0, 1.0, 1.0)
    # one cell away is not zero Euclidean distance
    assert z.gc == pytest.approx(1 - 1 / math.sqrt(58), abs=1e-12)
    assert z.novelty == ap.novelty((1, 0, 0))
    z = ap.compute_all((0, 0), (9, 9), False, 0, 3, (1 / 3, 1 / 3, 1 / 3), 0.0, None)
    assert z.certainty == pytest.approx(0.4765, abs=1e-4)
    assert z.novelty == pytest.approx(0.0, abs=1e-12)
    assert z.gc == 0.0
    assert z.anticipation == 0.5


def test_stress():
    assert ap.stress([1] * 6) == 0.0
    assert ap.stress([0] * 6) == pytest.approx(1.0, abs=1e-12)
    assert ap.stress([0.5] * 6) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValidationError):
        ap.stress([0.5] * 6, [0.2] * 6)


def test_appraisal_config_validates_weights():
    with pytest.raises(ValidationError):
        ap.AppraisalConfig(stress_weights=(0.5, 0.5, 0.5, 0, 0, 0))


probs = st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: tuple(np.asarray(v) / sum(v))
)
cells = st.tuples(st.integers(0, 9), st.integers(0, 9))


@given(cells, cells, st.booleans(), st.integers(0, 7), probs, st.floats(-2, 2), st.floats(-2, 2) | st.none())
def test_all_appraisals_in_unit_interval(a, g, vis, k, p, r, pred):
    z = ap.compute_all(a, g, vis, min(k, 7), 7, p, r, pred)
    assert all(0.0 <= v <= 1.0 for v in z)
    assert 0.0 <= ap.stress(z) <= 1.0


@given(cells, cells)
def test_mr_symmetric(a, g):
    assert ap.motivational_relevance(a, g, 10) == ap.motivational_relevance(g, a, 10)


def test_monotonicity():
    mr = [ap.motivational_relevance((0, 0), (d, 0), 10) for d in range(1, 10)]
    assert all(x > y for x, y in zip(mr, mr[1:]))
    cp = [ap.coping_potential(k, 7) for k in range(8)]
    assert all(x > y for x, y in zip(cp, cp[1:]))
    gc = [ap.goal_congruence((0, 0), (d, 0), True, 7) for d in range(0, 8)]
    assert all(x > y for x, y in zip(gc, gc[1:]))


@given(probs)
def test_certainty_one_iff_deterministic(p):
    deterministic = max(p) == 1.0
    assert (ap.certainty(p) == 1.0) == deterministic


@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.integers(0, 5), st.floats(-0.3, 0.3))
def test_stress_linear(z, i, dz):
    z2 = list(z)
    z2[i] += dz
    slope = ap.DEFAULT_STRESS_WEIGHTS[i]
    assert ap.stress(z2) - ap.stress(z) == pytest.approx(-slope * dz, abs=1e-12)
