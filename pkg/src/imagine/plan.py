"""Final-answer travel plans and the ``<think>...</think>`` response envelope.

All string microformats ("Name, City", "from A to B", transport strings) are
parsed here and nowhere else.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
ABSENT = "-"

PLAN_KEYS = ("day", "current_city", "transportation", "breakfast", "lunch", "dinner", "attraction", "accommodation")
MEAL_KEYS = ("breakfast", "lunch", "dinner")


class FormatFailure(ValueError):
    """The response does not follow ``<think> ... </think> ...``."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class PlanFormatError(ValueError):
    """The final answer is not a valid JSON travel plan."""


@dataclass(frozen=True)
class DayEntry:
    day: int
    current_city: str
    transportation: str = ABSENT
    breakfast: str = ABSENT
    lunch: str = ABSENT
    dinner: str = ABSENT
    attraction: str = ABSENT
    accommodation: str = ABSENT


@dataclass(frozen=True)
class TravelPlan:
    entries: tuple[DayEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ResponseEnvelope:
    think: str
    answer_raw: str
    plan: TravelPlan | None = None
    plan_error: str | None = None

    def text(self) -> str:
        return THINK_OPEN + self.think + THINK_CLOSE + self.answer_raw


def parse_envelope(text: str) -> ResponseEnvelope:
    """Split a response into its think section and trailing answer.

    Raises FormatFailure with one of the reasons ``missing open tag``,
    ``missing close tag``, ``multiple close tags`` or ``empty tail``.  The
    plan field is filled when the tail parses as a plan.
    """
    if not text.startswith(THINK_OPEN):
        raise FormatFailure("missing open tag")
    n_close = text.count(THINK_CLOSE)
    if n_close == 0:
        raise FormatFailure("missing close tag")
    if n_close > 1:
        raise FormatFailure("multiple close tags")
    cut = text.index(THINK_CLOSE)
    think = text[len(THINK_OPEN):cut]
    tail = text[cut + len(THINK_CLOSE):]
    if not tail.strip():
        raise FormatFailure("empty tail")
    try:
        plan = parse_plan(tail)
        err = None
    except PlanFormatError as exc:
        plan, err = None, str(exc)
    return ResponseEnvelope(think=think, answer_raw=tail, plan=plan, plan_error=err)


_FENCE = re.compile(r"^```[A-Za-z]*[ \t]*\n(.*)\n[ \t]*```$", re.DOTALL)


def strip_fence(raw: str) -> str:
    s = raw.strip()
    m = _FENCE.match(s)
    return m.group(1).strip() if m else s


def parse_plan(answer_raw: str) -> TravelPlan:
    try:
        data = json.loads(strip_fence(answer_raw))
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, list) or not data:
        raise PlanFormatError("plan must be a non-empty JSON array of day objects")
    entries = []
    for i, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise PlanFormatError(f"element {i} is not an object")
        keys = set(obj)
        if keys != set(PLAN_KEYS):
            missing = [k for k in PLAN_KEYS if k not in keys]
            extra = sorted(keys - set(PLAN_KEYS))
            raise PlanFormatError(f"day {i + 1}: missing keys {missing}, unexpected keys {extra}")
        day = obj["day"]
        if not isinstance(day, int) or isinstance(day, bool):
            raise PlanFormatError(f"day {i + 1}: 'day' must be an integer")
        if day != i + 1:
            raise PlanFormatError(f"day {i + 1}: non-consecutive days (got {day})")
        for k in PLAN_KEYS[1:]:
            if not isinstance(obj[k], str):
                raise PlanFormatError(f"day {day}: {k!r} must be a string")
        entries.append(DayEntry(**{k: obj[k] for k in PLAN_KEYS}))
    return TravelPlan(tuple(entries))


def plan_to_list(plan: TravelPlan) -> list[dict]:
    return [{k: asdict(e)[k] for k in PLAN_KEYS} for e in plan.entries]


def serialize_plan(plan: TravelPlan, indent: int | None = 1) -> str:
    return json.dumps(plan_to_list(plan), indent=indent, ensure_ascii=False)


# ---------------------------------------------------------------------------
# string microformats


@dataclass(frozen=True)
class Transport:
    mode: str  # flight | self-driving | taxi
    origin: str
    destination: str
    flight_number: str | None = None


_FROM_TO = re.compile(r"^from (.+?) to (.+)$")
_FLIGHT = re.compile(r"^Flight Number: (\S+), from (.+?) to (.+)$")
_GROUND = re.compile(r"^(Self-driving|Taxi), from (.+?) to (.+)$")


def parse_current_city(s: str) -> tuple[str, ...] | None:
    """``"A"`` -> ("A",); ``"from A to B"`` -> ("A", "B"); absent/empty -> None."""
    s = s.strip()
    if not s or s == ABSENT:
        return None
    m = _FROM_TO.match(s)
    if m:
        return (m.group(1).strip(), m.group(2).strip())
    return (s,)


def parse_transport(s: str) -> Transport | None:
    s = s.strip()
    m = _FLIGHT.match(s)
    if m:
        return Transport("flight", m.group(2).strip(), m.group(3).strip(), m.group(1))
    m = _GROUND.match(s)
    if m:
        return Transport(m.group(1).lower(), m.group(2).strip(), m.group(3).strip())
    return None


def format_transport(mode: str, origin: str, destination: str, flight_number: str | None = None) -> str:
    if mode == "flight":
        return f"Flight Number: {flight_number}, from {origin} to {destination}"
    return f"{'Self-driving' if mode == 'self-driving' else 'Taxi'}, from {origin} to {destination}"


def parse_item(s: str) -> tuple[str, str] | None:
    """``"Name, City"`` -> (name, city), splitting on the last comma."""
    name, sep, city = s.strip().rpartition(",")
    if not sep or not name.strip() or not city.strip():
        return None
    return name.strip(), city.strip()


def split_attractions(s: str) -> list[str]:
    return [part for part in (p.strip() for p in s.split(";")) if part]


def format_item(name: str, city: str) -> str:
    return f"{name}, {city}"
