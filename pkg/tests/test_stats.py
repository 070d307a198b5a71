import math

import numpy as np
import pytest

from fairguide.errors import ValidationError
from fairguide.stats import compare_conditions, mann_whitney_u


def exhaustive_u(a, b):
    """Pair-counting oracle: wins + half ties for sample a."""
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def test_u_hand_case_disjoint():
    u, p = mann_whitney_u([1, 2], [3, 4])
    assert u == 0.0
    assert 0 < p <= 1


def test_u_identical_multisets():
    a = [1.0, 2.0, 2.0, 7.0]
    u, p = mann_whitney_u(a, list(a))
    assert u == len(a) * len(a) / 2
    assert 0 < p <= 1


def test_constant_equal_lists_p_one():
    u, p = mann_whitney_u([3.0] * 5, [3.0] * 7)
    assert p == 1.0
    assert u == 5 * 7 / 2


def test_empty_rejected():
    with pytest.raises(ValidationError):
        mann_whitney_u([], [1.0])


def test_u_matches_exhaustive_oracle_500_trials():
    rng = np.random.default_rng(99)
    for _ in range(500):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        # small integer support provokes plenty of ties
        a = list(rng.integers(0, 5, size=n).astype(float))
        b = list(rng.integers(0, 5, size=m).astype(float))
        u, p = mann_whitney_u(a, b)
        assert u == exhaustive_u(a, b)
        assert 0 < p <= 1.0


def test_clear_separation_is_significant():
    rng = np.random.default_rng(4)
    a = list(rng.normal(1.0, 0.2, size=40))
    b = list(rng.normal(0.0, 0.2, size=40))
    _, p = mann_whitney_u(a, b)
    assert p < 1e-6


def _report(cond, pre, post, change, sid="s", task="income"):
    return {
        "session_id": sid, "task_id": task, "condition": cond,
        "excluded": False, "partial": False,
        "pre_unfairness": pre, "post_unfairness": post,
        "key_attribute_change_rate": change,
    }


def test_compare_conditions_two_arms():
    reports = [
        _report("fair_machine_guidance", 0.3, 0.05, 0.5, sid=f"g{i}")
        for i in range(6)
    ] + [
        _report("bias_feedback", 0.3, 0.28, 0.0, sid=f"b{i}")
        for i in range(6)
    ]
    result = compare_conditions(reports)
    arms = result["arms"]
    assert arms["fair_machine_guidance"]["n"] == 6
    assert math.isclose(arms["fair_machine_guidance"]["median_improvement"], 0.25)
    assert math.isclose(arms["bias_feedback"]["median_improvement"], 0.02)
    assert "improvement" in result["tests"]
    assert 0 < result["tests"]["improvement"]["p"] <= 1
    assert len(result["scatter"]) == 12


def test_compare_conditions_skips_incomplete():
    reports = [
        _report("bias_feedback", 0.3, 0.2, 0.0),
        dict(_report("bias_feedback", 0.3, 0.2, 0.0), excluded=True),
        dict(_report("bias_feedback", 0.3, 0.2, 0.0), partial=True),
    ]
    result = compare_conditions(reports)
    assert result["arms"]["bias_feedback"]["n"] == 1
