"""Prompt templates for the Reasoner, Judge and Reflector roles.

Prompts embed the structured query between ``<query>`` tags and the answer
under review between ``<answer>`` tags so that programmatic agents (the
oracle) can read them back.
"""

from __future__ import annotations

import json
import re

from ..query_gen import Query

SECTION_HEADERS = ("## Transportation", "## Restaurants", "## Attractions", "## Accommodations")

OUTPUT_FORMAT = """## Output format
Reason step by step inside <think></think>. After </think>, output only a JSON array with one object per day and exactly these keys: "day", "current_city", "transportation", "breakfast", "lunch", "dinner", "attraction", "accommodation".
- "day" is an integer starting at 1; every other value is a string, "-" when empty.
- On a travel day write "current_city" as "from A to B"; otherwise give the single city.
- Write transportation as "Flight Number: F0001, from A to B", "Self-driving, from A to B" or "Taxi, from A to B".
- Write every restaurant, attraction and accommodation as "Name, City"; join several attractions with ";"."""

JUDGE_VERDICTS = ("Errors exist.", "No errors.")

_JUDGE_FOCUS = (
    "Check every step of the reasoning against the query and the reference information.",
    "Check the final plan item by item: cities, transport, meals, lodging, constraints and the total cost.",
)


def _lines(records: list[dict]) -> str:
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in records) if records else "(none)"


def render_reference(ref: dict) -> str:
    parts = [SECTION_HEADERS[0]]
    for seg in ref["transportation"]:
        parts.append(f"{seg['segment']} on {seg['date']}:")
        parts.append(_lines(seg["options"]))
    for header, key in zip(SECTION_HEADERS[1:], ("restaurants", "attractions", "accommodations")):
        parts.append(header)
        for city, listing in ref["cities"].items():
            parts.append(f"{city}:")
            parts.append(_lines(listing[key]))
    return "\n".join(parts)


def _query_block(query: Query) -> str:
    return f"## Query\n{query.query_text}\n<query>\n{json.dumps(query.to_json(), ensure_ascii=False)}\n</query>"


def build_reasoner_prompt(query: Query, reference_information: dict) -> str:
    return (
        "You are a travel planner. Use only the reference information to build a plan that satisfies "
        "every requirement of the query, including the budget.\n\n"
        f"{_query_block(query)}\n\n# Reference information\n{render_reference(reference_information)}\n\n"
        f"{OUTPUT_FORMAT}\n"
    )


def build_judge_prompt(query: Query, reference_information: dict, reasoning: str, answer: str,
                       variant: int = 0) -> str:
    return (
        "You are a judge. Review the reasoning and answer below for errors. Do not fix anything. "
        f"{_JUDGE_FOCUS[variant % len(_JUDGE_FOCUS)]} "
        'Reply with exactly "Errors exist." or "No errors." and nothing else.\n\n'
        f"{_query_block(query)}\n\n# Reference information\n{render_reference(reference_information)}\n\n"
        f"## Reasoning\n<reasoning>\n{reasoning}\n</reasoning>\n\n## Answer\n<answer>\n{answer}\n</answer>\n"
    )


def build_reflector_prompt(query: Query, reference_information: dict, reasoning: str, answer: str) -> str:
    return (
        "You are a reflector. The reasoning below contains errors. First point out each error in the "
        "reasoning, then give the correction. Finally write a line containing only \"Final answer:\" "
        "followed by the corrected JSON plan.\n\n"
        f"{_query_block(query)}\n\n# Reference information\n{render_reference(reference_information)}\n\n"
        f"{OUTPUT_FORMAT}\n\n"
        f"## Reasoning\n<reasoning>\n{reasoning}\n</reasoning>\n\n## Answer\n<answer>\n{answer}\n</answer>\n"
    )


# ---------------------------------------------------------------------------
# reading prompts and replies back

_QUERY = re.compile(r"<query>\n(.*?)\n</query>", re.DOTALL)
_ANSWER = re.compile(r"<answer>\n(.*?)\n</answer>", re.DOTALL)
_FINAL = re.compile(r"final answer:", re.IGNORECASE)


def extract_query(prompt: str) -> Query:
    m = _QUERY.search(prompt)
    if m is None:
        raise ValueError("prompt carries no <query> block")
    return Query.from_json(json.loads(m.group(1)))


def extract_answer(prompt: str) -> str:
    m = _ANSWER.search(prompt)
    if m is None:
        raise ValueError("prompt carries no <answer> block")
    return m.group(1)


def parse_verdict(text: str) -> str:
    """``no_errors`` only for an unambiguous "No errors"; anything else is ``errors_exist``."""
    low = text.lower()
    if "no errors" in low and "errors exist" not in low:
        return "no_errors"
    return "errors_exist"


def split_reasoner_reply(text: str) -> tuple[str, str]:
    """Return (reasoning, answer) from a ``<think>...</think>answer`` reply."""
    if "</think>" not in text:
        return "", text.strip()
    head, _, answer = text.partition("</think>")
    if head.startswith("<think>"):
        head = head[len("<think>"):]
    return head, answer.strip()


def split_reflector_reply(text: str) -> tuple[str, str]:
    """Return (reflection content, corrected answer); the answer follows the last "Final answer:"."""
    matches = list(_FINAL.finditer(text))
    if not matches:
        raise ValueError('reflector reply has no "Final answer:" line')
    m = matches[-1]
    return text[:m.start()].strip(), text[m.end():].strip()
