import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imagine.evaluator import evaluate
from imagine.reward import REFLECTION_CLOSER, REFLECTION_PROMPT, compute_reward, detect_reflection
from mini_world import GOOD, MINI, make_query
from plan_fuzz import mutate
from reward_fixtures import FIXTURES, PLAIN, REFLECT, wrap


@pytest.mark.parametrize("label,query,text,expected", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_hand_scored_fixture(label, query, text, expected):
    r = compute_reward(MINI, query, text)
    assert r.total == expected
    assert r.format_ok == (expected != -1.0)


def test_fixture_suite_is_large_enough():
    assert len(FIXTURES) >= 30


def test_partial_credit_example():
    # 6 of 8 commonsense, 1 of 2 hard, no reflection
    r = compute_reward(MINI, make_query(), wrap(PLAIN, [{**GOOD[0]}, {**GOOD[1], "breakfast": "Ghost Diner, Bville"},
                                                        GOOD[2]]))
    assert (r.commonsense_reward, r.hard_reward, r.reflection_reward) == (0.75, 0.5, -0.5)
    assert r.total == 0.75


def test_breakdown_components():
    r = compute_reward(MINI, make_query(), wrap(REFLECT, GOOD))
    assert r.to_json() == {"format_ok": True, "commonsense_reward": 1.0, "hard_reward": 1.0,
                           "reflection_reward": 0.5, "total": 2.5, "reason": ""}


def test_format_failure_reason():
    assert compute_reward(MINI, make_query(), "<think>x").reason.startswith("format")
    assert compute_reward(MINI, make_query(), "<think>x</think>oops").reason.startswith("json")


def test_count_vacuous_hard_changes_denominator():
    text = wrap(PLAIN, GOOD)
    q = make_query(cuisine="Japanese")
    assert compute_reward(MINI, q, text).hard_reward == 1 / 2
    assert compute_reward(MINI, q, text, count_vacuous_hard=True).hard_reward == 4 / 5


@pytest.mark.parametrize("think,expected", [
    (REFLECT, True),
    ("plan " * 50 + REFLECTION_PROMPT + " Errors: the dinner repeats. Fixed. " + REFLECTION_CLOSER, True),
    ("short. " + REFLECTION_PROMPT + " a long reflection " * 60 + REFLECTION_CLOSER, True),
    ("No marker here at all, just reasoning.", False),
    ("REFLECTION: checked. " + "more reasoning after the check. " * 30, False),
    ("reasoning " * 10 + "REFLECTION():   ", False),
    ("reasoning " * 10 + "reflection: lower case does not count", False),
    ("", False),
])
def test_detect_reflection(think, expected):
    assert detect_reflection(think) is expected


def test_reflection_position_boundary():
    # the last marker must start at or after 60% of the text
    body = "x" * 40
    assert detect_reflection("y" * 60 + "REFLECTION" + body[10:])  # starts at 60 of 100
    assert not detect_reflection("y" * 59 + "REFLECTION" + body[9:])  # starts at 59 of 100


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200), st.booleans())
def test_range_law_on_arbitrary_text(text, with_prefix):
    r = compute_reward(MINI, make_query(), ("<think>" if with_prefix else "") + text)
    assert r.total == -1.0 or -0.5 <= r.total <= 2.5


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(0, 5), reflect=st.booleans(), budget=st.integers(0, 2000))
def test_composition_law(seed, n, reflect, budget):
    plan = mutate(GOOD, MINI, random.Random(seed), n)
    q = make_query(budget=budget)
    text = wrap(REFLECT if reflect else PLAIN, plan)
    r = compute_reward(MINI, q, text)
    report = evaluate(MINI, q, text)
    assert r.format_ok
    assert r.commonsense_reward == report.commonsense_micro
    assert r.hard_reward == report.hard_micro
    assert r.total == report.commonsense_micro + report.hard_micro + (0.5 if reflect else -0.5)
    assert -0.5 <= r.total <= 2.5
    # raising the budget only ever turns the cost check from fail to pass
    assert compute_reward(MINI, make_query(budget=budget + 500), text).total >= r.total
    assert compute_reward(MINI, q, text) == r


def test_reward_json_is_serializable():
    json.dumps(compute_reward(MINI, make_query(), wrap(REFLECT, GOOD)).to_json())
