"""Rule-based plan checking: 8 commonsense checks, 5 hard checks, six criteria.

Check semantics
---------------
A day whose ``current_city`` is ``"from A to B"`` is a transition day: meals
and attractions may be in A or B, the night is spent in B.  Any other value
names the single city of that day.  ``"-"`` or an empty string marks an
absent field.

Vacuous hard checks (constraint not declared) report ``passed=True`` with
``applicable=False`` and are left out of the hard micro denominator unless
``count_vacuous_hard`` is set.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .plan import (
    MEAL_KEYS, FormatFailure, ResponseEnvelope, TravelPlan, parse_current_city, parse_envelope,
    parse_item, parse_transport, split_attractions,
)
from .query_gen import Query, rooms_needed
from .sandbox import Sandbox

COMMONSENSE = (
    "is_reasonable_visiting_city",
    "is_valid_restaurant",
    "is_valid_attraction",
    "is_valid_accommodation",
    "is_valid_transportation",
    "is_valid_information_in_current_city",
    "is_valid_information_in_sandbox",
    "is_not_absent",
)
HARD = (
    "is_valid_cuisine",
    "is_valid_room_rule",
    "is_valid_transportation",
    "is_valid_room_type",
    "is_valid_cost",
)
HARD_KIND = {
    "is_valid_cuisine": "cuisine",
    "is_valid_room_rule": "house rule",
    "is_valid_transportation": "transportation",
    "is_valid_room_type": "room type",
}
CRITERIA = (
    "Delivery Rate",
    "Commonsense Micro",
    "Commonsense Macro",
    "Hard Micro",
    "Hard Macro",
    "Final Pass Rate",
)
FORBIDDEN_MODE = {"no flight": "flight", "no self-driving": "self-driving"}


@dataclass(frozen=True)
class ConstraintResult:
    name: str
    applicable: bool
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class EvalReport:
    delivered: bool
    commonsense: tuple[ConstraintResult, ...]
    hard: tuple[ConstraintResult, ...]
    commonsense_passed: int
    commonsense_total: int
    hard_passed: int
    hard_total: int
    query_id: str = ""

    @property
    def commonsense_micro(self) -> float:
        return self.commonsense_passed / self.commonsense_total

    @property
    def hard_micro(self) -> float:
        return self.hard_passed / self.hard_total if self.hard_total else 1.0

    @property
    def commonsense_macro_pass(self) -> bool:
        return self.delivered and self.commonsense_passed == self.commonsense_total

    @property
    def hard_macro_pass(self) -> bool:
        return self.delivered and all(r.passed for r in self.hard if r.applicable)

    @property
    def final_pass(self) -> bool:
        return self.delivered and self.commonsense_macro_pass and self.hard_macro_pass

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "delivered": self.delivered,
            "commonsense": [asdict(r) for r in self.commonsense],
            "hard": [asdict(r) for r in self.hard],
            "commonsense_micro": self.commonsense_micro,
            "commonsense_macro_pass": self.commonsense_macro_pass,
            "hard_micro": self.hard_micro,
            "hard_macro_pass": self.hard_macro_pass,
            "final_pass": self.final_pass,
        }


def _absent(s: str) -> bool:
    return s.strip() in ("", "-")


@dataclass
class _Day:
    index: int  # 1-based
    date: str | None
    cities: tuple[str, ...] | None
    transport_raw: str | None
    meals: list[str] = field(default_factory=list)  # non-absent raw strings
    meal_slots: dict = field(default_factory=dict)  # slot -> raw (absent included)
    attractions: list[str] = field(default_factory=list)
    accommodation: str | None = None

    @property
    def transition(self) -> bool:
        return self.cities is not None and len(self.cities) == 2

    @property
    def item_cities(self) -> set[str]:
        return set(self.cities or ())

    @property
    def night_city(self) -> str | None:
        return self.cities[-1] if self.cities else None


def _days(query: Query, plan: TravelPlan) -> list[_Day]:
    out = []
    for i, e in enumerate(plan.entries, start=1):
        d = _Day(
            index=i,
            date=query.date[i - 1] if i <= len(query.date) else None,
            cities=parse_current_city(e.current_city),
            transport_raw=None if _absent(e.transportation) else e.transportation,
            accommodation=None if _absent(e.accommodation) else e.accommodation,
        )
        for slot in MEAL_KEYS:
            raw = getattr(e, slot)
            d.meal_slots[slot] = raw
            if not _absent(raw):
                d.meals.append(raw)
        if not _absent(e.attraction):
            d.attractions = split_attractions(e.attraction)
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# commonsense checks


def _visiting_city(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    seq: list[str] = []
    cur = None
    for d in days:
        if d.cities is None:
            return False, f"day {d.index}: no current city"
        if d.transition:
            a, b = d.cities
            if a == b:
                return False, f"day {d.index}: transition to the same city"
            if cur is not None and a != cur:
                return False, f"day {d.index}: departs {a} but traveller is in {cur}"
            if not seq:
                seq.append(a)
            seq.append(b)
            cur = b
        else:
            (c,) = d.cities
            if cur is not None and c != cur:
                return False, f"day {d.index}: jumps from {cur} to {c} without transport"
            if not seq:
                seq.append(c)
            cur = c
    if len(seq) < 2 or seq[0] != q.origin or seq[-1] != q.origin:
        return False, f"trip {seq} does not start and end at {q.origin}"
    inner = seq[1:-1]
    if len(inner) != q.visiting_city_number or len(set(inner)) != len(inner) or set(inner) != set(q.destination):
        return False, f"visited {inner}, expected {list(q.destination)}"
    return True, ""


def _restaurant(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    seen = set()
    for d in days:
        for raw in d.meals:
            item = parse_item(raw)
            if item is None or sb.restaurant(*item) is None:
                return False, f"day {d.index}: unknown restaurant {raw!r}"
            if item in seen:
                return False, f"day {d.index}: restaurant {raw!r} repeated"
            seen.add(item)
    return True, ""


def _attraction(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    seen = set()
    for d in days:
        for raw in d.attractions:
            item = parse_item(raw)
            if item is None or sb.attraction(*item) is None:
                return False, f"day {d.index}: unknown attraction {raw!r}"
            if item in seen:
                return False, f"day {d.index}: attraction {raw!r} repeated"
            seen.add(item)
    return True, ""


def _accommodation(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    stays: list[list] = []  # [record, nights, first day]
    prev = None
    for d in days:
        if d.accommodation is None:
            prev = None
            continue
        item = parse_item(d.accommodation)
        rec = sb.accommodation(*item) if item else None
        if rec is None:
            return False, f"day {d.index}: unknown accommodation {d.accommodation!r}"
        if item == prev:
            stays[-1][1] += 1
        else:
            stays.append([rec, 1, d.index])
        prev = item
    for rec, nights, first in stays:
        if nights < rec.min_nights:
            return False, f"day {first}: {rec.name} needs {rec.min_nights} nights, booked {nights}"
    return True, ""


def _transportation(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    modes = set()
    for d in days:
        if d.transport_raw is None:
            continue
        t = parse_transport(d.transport_raw)
        if t is None:
            return False, f"day {d.index}: unreadable transportation {d.transport_raw!r}"
        if t.mode == "flight":
            rec = sb.flight(t.flight_number)
            if rec is None or (rec.origin, rec.destination) != (t.origin, t.destination):
                return False, f"day {d.index}: no flight {t.flight_number} from {t.origin} to {t.destination}"
            if d.date is None or d.date not in rec.date_availability:
                return False, f"day {d.index}: flight {t.flight_number} does not operate on {d.date}"
        elif not any(link.mode == t.mode for link in sb.links_between(t.origin, t.destination)):
            return False, f"day {d.index}: no {t.mode} from {t.origin} to {t.destination}"
        modes.add(t.mode)
    if {"flight", "self-driving"} <= modes:
        return False, "self-driving and flights mixed in one trip"
    return True, ""


def _current_city(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    for d in days:
        if d.cities is None:
            return False, f"day {d.index}: no current city"
        for raw in [*d.meals, *d.attractions]:
            item = parse_item(raw)
            if item is not None and item[1] not in d.item_cities:
                return False, f"day {d.index}: {raw!r} is not in {'/'.join(d.cities)}"
        if d.accommodation is not None:
            item = parse_item(d.accommodation)
            if item is not None and item[1] != d.night_city:
                return False, f"day {d.index}: accommodation {d.accommodation!r} is not in {d.night_city}"
        if d.transport_raw is not None:
            t = parse_transport(d.transport_raw)
            if t is None:
                continue
            if not d.transition or (t.origin, t.destination) != d.cities:
                return False, f"day {d.index}: transportation does not match {'/'.join(d.cities)}"
    return True, ""


def _sandbox(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    for d in days:
        for c in d.cities or ():
            if not sb.has_city(c):
                return False, f"day {d.index}: unknown city {c!r}"
        for raw, lookup in [*((m, sb.restaurant) for m in d.meals),
                            *((a, sb.attraction) for a in d.attractions),
                            *(((d.accommodation, sb.accommodation),) if d.accommodation else ())]:
            item = parse_item(raw)
            if item is None or lookup(*item) is None:
                return False, f"day {d.index}: {raw!r} not found in the sandbox"
        if d.transport_raw is not None:
            t = parse_transport(d.transport_raw)
            if t is None:
                return False, f"day {d.index}: unreadable transportation {d.transport_raw!r}"
            if t.mode == "flight" and sb.flight(t.flight_number) is None:
                return False, f"day {d.index}: unknown flight {t.flight_number}"
            if not (sb.has_city(t.origin) and sb.has_city(t.destination)):
                return False, f"day {d.index}: transportation cites an unknown city"
    return True, ""


def _not_absent(sb: Sandbox, q: Query, days: list[_Day]) -> tuple[bool, str]:
    if len(days) != q.days:
        return False, f"plan has {len(days)} days, query asks for {q.days}"
    for d in days:
        if d.cities is None:
            return False, f"day {d.index}: current city absent"
        if d.transition and d.transport_raw is None:
            return False, f"day {d.index}: transportation absent on a travel day"
        if d.index < q.days and d.accommodation is None and sb.accommodations_in(d.night_city):
            return False, f"day {d.index}: accommodation absent"
        if not d.transition and sb.restaurants_in(d.cities[0]):
            for slot, raw in d.meal_slots.items():
                if _absent(raw):
                    return False, f"day {d.index}: {slot} absent"
    return True, ""


_COMMONSENSE_FNS = (
    _visiting_city, _restaurant, _attraction, _accommodation,
    _transportation, _current_city, _sandbox, _not_absent,
)


def check_commonsense(sb: Sandbox, query: Query, plan: TravelPlan) -> tuple[ConstraintResult, ...]:
    days = _days(query, plan)
    out = []
    for name, fn in zip(COMMONSENSE, _COMMONSENSE_FNS):
        ok, detail = fn(sb, query, days)
        out.append(ConstraintResult(name, True, ok, detail))
    return tuple(out)


# ---------------------------------------------------------------------------
# hard checks


def plan_cost(sb: Sandbox, query: Query, plan: TravelPlan) -> int | None:
    """Total cost of ``plan`` for the query's party, or None if any priced item is unresolvable."""
    people = query.people_number
    total = 0
    for d in _days(query, plan):
        if d.transport_raw is not None:
            t = parse_transport(d.transport_raw)
            if t is None:
                return None
            if t.mode == "flight":
                rec = sb.flight(t.flight_number)
                if rec is None:
                    return None
                total += rec.cost * people
            else:
                costs = [link.cost for link in sb.links_between(t.origin, t.destination) if link.mode == t.mode]
                if not costs:
                    return None
                total += costs[0]
        for raw in d.meals:
            item = parse_item(raw)
            rec = sb.restaurant(*item) if item else None
            if rec is None:
                return None
            total += rec.avg_cost * people
        if d.accommodation is not None:
            item = parse_item(d.accommodation)
            rec = sb.accommodation(*item) if item else None
            if rec is None:
                return None
            total += rec.price_per_night * rooms_needed(people, rec.max_occupancy)
    return total


def _accommodation_records(sb: Sandbox, days: list[_Day]):
    for d in days:
        if d.accommodation is not None:
            item = parse_item(d.accommodation)
            yield d, (sb.accommodation(*item) if item else None)


def check_hard(sb: Sandbox, query: Query, plan: TravelPlan) -> tuple[ConstraintResult, ...]:
    days = _days(query, plan)
    out = []

    want = query.constraint("cuisine")
    if want is None:
        out.append(ConstraintResult("is_valid_cuisine", False, True, "not requested"))
    else:
        hit = False
        for d in days:
            for raw in d.meals:
                item = parse_item(raw)
                rec = sb.restaurant(*item) if item else None
                hit = hit or (rec is not None and want in rec.cuisines)
        out.append(ConstraintResult("is_valid_cuisine", True, hit, "" if hit else f"no {want} meal"))

    rule = query.constraint("house rule")
    if rule is None:
        out.append(ConstraintResult("is_valid_room_rule", False, True, "not requested"))
    else:
        ok, detail = True, ""
        for d, rec in _accommodation_records(sb, days):
            if rec is None or f"no {rule}" in rec.house_rules:
                ok, detail = False, f"day {d.index}: {d.accommodation!r} does not allow {rule}"
                break
        out.append(ConstraintResult("is_valid_room_rule", True, ok, detail))

    forbidden = FORBIDDEN_MODE.get(query.constraint("transportation") or "")
    if query.constraint("transportation") is None:
        out.append(ConstraintResult("is_valid_transportation", False, True, "not requested"))
    else:
        ok, detail = True, ""
        for d in days:
            if d.transport_raw is None:
                continue
            t = parse_transport(d.transport_raw)
            if t is None or t.mode == forbidden:
                ok, detail = False, f"day {d.index}: {d.transport_raw!r} violates {query.constraint('transportation')}"
                break
        out.append(ConstraintResult("is_valid_transportation", True, ok, detail))

    room = query.constraint("room type")
    if room is None:
        out.append(ConstraintResult("is_valid_room_type", False, True, "not requested"))
    else:
        ok, detail = True, ""
        for d, rec in _accommodation_records(sb, days):
            match = rec is not None and (
                rec.room_type != "shared room" if room == "not shared room" else rec.room_type == room
            )
            if not match:
                ok, detail = False, f"day {d.index}: {d.accommodation!r} is not a {room}"
                break
        out.append(ConstraintResult("is_valid_room_type", True, ok, detail))

    cost = plan_cost(sb, query, plan)
    if cost is None:
        out.append(ConstraintResult("is_valid_cost", True, False, "plan cites unpriced items"))
    else:
        ok = cost <= query.budget
        out.append(ConstraintResult("is_valid_cost", True, ok, f"cost {cost} vs budget {query.budget}"))
    return tuple(out)


# ---------------------------------------------------------------------------
# reports


def _report(query: Query, cs: Sequence[ConstraintResult], hard: Sequence[ConstraintResult],
            delivered: bool, count_vacuous_hard: bool) -> EvalReport:
    counted = [r for r in hard if r.applicable or count_vacuous_hard]
    return EvalReport(
        delivered=delivered,
        commonsense=tuple(cs),
        hard=tuple(hard),
        commonsense_passed=sum(r.passed for r in cs),
        commonsense_total=len(cs),
        hard_passed=sum(r.passed for r in counted),
        hard_total=len(counted),
        query_id=query.query_id,
    )


def undelivered_report(query: Query, reason: str, count_vacuous_hard: bool = False) -> EvalReport:
    cs = [ConstraintResult(n, True, False, reason) for n in COMMONSENSE]
    hard = [
        ConstraintResult(n, n == "is_valid_cost" or query.constraint(HARD_KIND[n]) is not None, False, reason)
        for n in HARD
    ]
    return _report(query, cs, hard, False, count_vacuous_hard)


def evaluate_plan(sb: Sandbox, query: Query, plan: TravelPlan, count_vacuous_hard: bool = False) -> EvalReport:
    return _report(query, check_commonsense(sb, query, plan), check_hard(sb, query, plan), True, count_vacuous_hard)


def evaluate(
    sb: Sandbox,
    query: Query,
    response: str | ResponseEnvelope | FormatFailure,
    count_vacuous_hard: bool = False,
) -> EvalReport:
    """Evaluate a raw response, a parsed envelope, or a format failure."""
    if isinstance(response, str):
        try:
            response = parse_envelope(response)
        except FormatFailure as exc:
            response = exc
    if isinstance(response, FormatFailure):
        return undelivered_report(query, f"format failure: {response.reason}", count_vacuous_hard)
    if response.plan is None:
        return undelivered_report(query, f"plan failure: {response.plan_error}", count_vacuous_hard)
    return evaluate_plan(sb, query, response.plan, count_vacuous_hard)


class EmptyBatchError(ValueError):
    pass


@dataclass(frozen=True)
class BatchReport:
    """Per-query reports plus the six criteria, as percentages in [0, 100]."""

    reports: tuple[EvalReport, ...]
    delivery_rate: float
    commonsense_micro: float
    commonsense_macro: float
    hard_micro: float
    hard_macro: float
    final_pass_rate: float

    def criteria(self) -> dict[str, float]:
        return dict(zip(CRITERIA, (
            self.delivery_rate, self.commonsense_micro, self.commonsense_macro,
            self.hard_micro, self.hard_macro, self.final_pass_rate,
        )))

    def to_json(self) -> dict:
        return {"criteria": self.criteria(), "n": len(self.reports), "reports": [r.to_json() for r in self.reports]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query_id", "delivered", *(f"commonsense.{n}" for n in COMMONSENSE),
                    *(f"hard.{n}" for n in HARD), "commonsense_micro", "hard_micro", "final_pass"])
        for r in self.reports:
            hard_cells = [("" if not x.applicable else int(x.passed)) for x in r.hard]
            w.writerow([r.query_id, int(r.delivered), *(int(x.passed) for x in r.commonsense), *hard_cells,
                        f"{r.commonsense_micro:.6f}", f"{r.hard_micro:.6f}", int(r.final_pass)])
        return buf.getvalue()


def aggregate(reports: Iterable[EvalReport]) -> BatchReport:
    reports = tuple(reports)
    if not reports:
        raise EmptyBatchError("cannot aggregate an empty batch")
    n = len(reports)

    def pct(k: int, total: int) -> float:
        return 100.0 * k / total if total else 100.0

    return BatchReport(
        reports=reports,
        delivery_rate=pct(sum(r.delivered for r in reports), n),
        commonsense_micro=pct(sum(r.commonsense_passed for r in reports), sum(r.commonsense_total for r in reports)),
        commonsense_macro=pct(sum(r.commonsense_macro_pass for r in reports), n),
        hard_micro=pct(sum(r.hard_passed for r in reports), sum(r.hard_total for r in reports)),
        hard_macro=pct(sum(r.hard_macro_pass for r in reports), n),
        final_pass_rate=pct(sum(r.final_pass for r in reports), n),
    )


def batch_json(batch: BatchReport) -> str:
    return json.dumps(batch.to_json(), indent=1)
