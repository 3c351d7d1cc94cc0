"""Composite rule-based reward for GRPO.

A response scores -1 outright when it is not ``<think>...</think>`` followed
by a JSON plan.  Otherwise the score is the commonsense pass ratio plus the
hard pass ratio plus 0.5 if the think section ends in a reflection, or minus
0.5 if it does not.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass

from .evaluator import evaluate_plan
from .plan import FormatFailure, parse_envelope
from .query_gen import Query
from .sandbox import Sandbox

FORMAT_PENALTY = -1.0
REFLECTION_BONUS = 0.5
REFLECTION_MARKER = "REFLECTION"
REFLECTION_PROMPT = "REFLECTION(Now, I need to reflect on whether there are any errors in my reasoning above):"
REFLECTION_CLOSER = "The reflection is over, now IMMEDIATELY output the final answer!"
# last marker must start within the trailing 40% of the think text
TRAILING_FRACTION = 0.4

_MARKER = re.compile(re.escape(REFLECTION_MARKER))
_HEADER = re.compile(r"\A\s*(\([^)]*\))?\s*:?")


@dataclass(frozen=True)
class RewardBreakdown:
    format_ok: bool
    commonsense_reward: float
    hard_reward: float
    reflection_reward: float
    total: float
    reason: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def detect_reflection(think: str) -> bool:
    """True when the think text ends with a reflection.

    The last ``REFLECTION`` marker must be followed by some content and must
    either start in the trailing 40% of the text, or open a block that runs
    to the closing sentence at the very end. Only the marker word is
    required; demanding the full parenthetical header would be stricter.
    """
    matches = list(_MARKER.finditer(think))
    if not matches:
        return False
    last = matches[-1]
    tail = think[last.end():]
    body = tail[_HEADER.match(tail).end():]
    if not body.strip():
        return False
    if last.start() >= (1.0 - TRAILING_FRACTION) * len(think):
        return True
    return think.rstrip().endswith(REFLECTION_CLOSER)


def compute_reward(sb: Sandbox, query: Query, response_text: str, count_vacuous_hard: bool = False) -> RewardBreakdown:
    try:
        env = parse_envelope(response_text)
    except FormatFailure as exc:
        return RewardBreakdown(False, 0.0, 0.0, 0.0, FORMAT_PENALTY, f"format: {exc.reason}")
    if env.plan is None:
        return RewardBreakdown(False, 0.0, 0.0, 0.0, FORMAT_PENALTY, f"json: {env.plan_error}")
    report = evaluate_plan(sb, query, env.plan, count_vacuous_hard)
    reflection = REFLECTION_BONUS if detect_reflection(env.think) else -REFLECTION_BONUS
    cs, hard = report.commonsense_micro, report.hard_micro
    return RewardBreakdown(True, cs, hard, reflection, cs + hard + reflection)
