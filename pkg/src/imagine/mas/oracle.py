"""Sandbox-backed oracle agents for end-to-end runs without an LLM.

The planner searches every destination order and every per-leg transport
mode on the two-nights-per-city schedule, picks the cheapest lodging and
meals that satisfy the declared constraints, and keeps the cheapest plan.
A query is feasible for the oracle when that plan fits the budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..evaluator import FORBIDDEN_MODE, evaluate
from ..plan import ABSENT, DayEntry, TravelPlan, format_item, format_transport, serialize_plan
from ..query_gen import Query, rooms_needed, transport_options
from ..sandbox import Sandbox
from .backends import Completion, count_tokens
from .prompts import extract_answer, extract_query

NIGHTS_PER_CITY = 2
MEALS_PER_FULL_DAY = 3


@dataclass(frozen=True)
class OracleResult:
    plan: TravelPlan
    cost: int
    feasible: bool
    notes: tuple[str, ...]


def _room_ok(q: Query, acc) -> bool:
    rule, room = q.constraint("house rule"), q.constraint("room type")
    if rule is not None and f"no {rule}" in acc.house_rules:
        return False
    if room is not None:
        if room == "not shared room":
            if acc.room_type == "shared room":
                return False
        elif acc.room_type != room:
            return False
    return acc.min_nights <= NIGHTS_PER_CITY


class OraclePlanner:
    def __init__(self, sandbox: Sandbox) -> None:
        self.sb = sandbox

    def _leg_options(self, q: Query, a: str, b: str, date: str, strict: bool) -> dict:
        """Cheapest link per mode for one leg, as mode -> (cost, link)."""
        forbidden = FORBIDDEN_MODE.get(q.constraint("transportation") or "")
        best: dict = {}
        for link in transport_options(self.sb, a, b, date):
            if strict and link.mode == forbidden:
                continue
            cost = link.cost * (q.people_number if link.mode == "flight" else 1)
            if link.mode not in best or cost < best[link.mode][0]:
                best[link.mode] = (cost, link)
        return best

    def _transport(self, q: Query, legs, strict: bool):
        per_leg = [self._leg_options(q, a, b, date, strict) for a, b, date in legs]
        if any(not opts for opts in per_leg):
            return None
        best = None
        for modes in itertools.product(*(sorted(opts) for opts in per_leg)):
            if strict and {"flight", "self-driving"} <= set(modes):
                continue
            cost = sum(opts[m][0] for opts, m in zip(per_leg, modes))
            if best is None or cost < best[0]:
                best = (cost, [opts[m][1] for opts, m in zip(per_leg, modes)])
        return best

    def _lodging(self, q: Query, city: str, strict: bool):
        cands = [a for a in self.sb.accommodations_in(city) if not strict or _room_ok(q, a)]
        if not cands:
            return None
        costs = [(a.price_per_night * rooms_needed(q.people_number, a.max_occupancy) * NIGHTS_PER_CITY, a.name, a)
                 for a in cands]
        cost, _, acc = min(costs)
        return cost, acc

    def _meals(self, q: Query, cities, strict: bool):
        """Cheapest distinct restaurants per city, forcing one cuisine match somewhere if required."""
        per_city = {}
        for c in cities:
            rs = sorted(self.sb.restaurants_in(c), key=lambda r: (r.avg_cost, r.name))
            if len(rs) < MEALS_PER_FULL_DAY:
                return None
            per_city[c] = rs
        base = {c: rs[:MEALS_PER_FULL_DAY] for c, rs in per_city.items()}
        want = q.constraint("cuisine")
        if strict and want is not None and not any(want in r.cuisines for rs in base.values() for r in rs):
            best = None
            for c, rs in per_city.items():
                hits = [r for r in rs if want in r.cuisines]
                if not hits:
                    continue
                pick = [hits[0], *[r for r in rs if r is not hits[0]][:MEALS_PER_FULL_DAY - 1]]
                extra = sum(r.avg_cost for r in pick) - sum(r.avg_cost for r in base[c])
                if best is None or extra < best[0]:
                    best = (extra, c, pick)
            if best is None:
                return None
            base[best[1]] = best[2]
        cost = sum(r.avg_cost for rs in base.values() for r in rs) * q.people_number
        return cost, base

    def _assemble(self, q: Query, order, links, lodging, meals) -> TravelPlan:
        cities = [q.origin, *order, q.origin]
        used_attr: set = set()
        entries = []
        for j in range(len(order) + 1):
            a, b = cities[j], cities[j + 1]
            day = 2 * j + 1
            link = links[j] if links else None
            entries.append(DayEntry(
                day=day,
                current_city=f"from {a} to {b}",
                transportation=format_transport(link.mode, a, b, link.flight_number) if link else ABSENT,
                accommodation=format_item(lodging[b].name, b) if b in lodging and lodging[b] else ABSENT,
            ))
            if j == len(order):
                break
            attrs = [x for x in self.sb.attractions_in(b) if (x.name, x.city) not in used_attr][:1]
            used_attr.update((x.name, x.city) for x in attrs)
            rs = meals.get(b, []) if meals else []
            slots = [format_item(r.name, b) for r in rs] + [ABSENT] * (MEALS_PER_FULL_DAY - len(rs))
            entries.append(DayEntry(
                day=day + 1,
                current_city=b,
                breakfast=slots[0], lunch=slots[1], dinner=slots[2],
                attraction=";".join(format_item(x.name, x.city) for x in attrs) or ABSENT,
                accommodation=format_item(lodging[b].name, b) if lodging.get(b) else ABSENT,
            ))
        return TravelPlan(tuple(entries))

    def _attempt(self, q: Query, order, strict: bool):
        legs = [(a, b, q.date[2 * i]) for i, (a, b) in enumerate(zip([q.origin, *order], [*order, q.origin]))]
        transport = self._transport(q, legs, strict)
        lodging = {c: self._lodging(q, c, strict) for c in order}
        meals = self._meals(q, order, strict)
        complete = transport is not None and all(lodging.values()) and meals is not None
        cost = ((transport[0] if transport else 0) + sum(v[0] for v in lodging.values() if v)
                + (meals[0] if meals else 0))
        plan = self._assemble(
            q, order,
            transport[1] if transport else None,
            {c: (v[1] if v else None) for c, v in lodging.items()},
            meals[1] if meals else None,
        )
        return complete, cost, plan

    def plan(self, q: Query) -> OracleResult:
        best = None
        for order in itertools.permutations(q.destination):
            complete, cost, plan = self._attempt(q, order, strict=True)
            if complete and (best is None or cost < best[0]):
                best = (cost, plan)
        if best is not None:
            cost, plan = best
            if cost <= q.budget:
                return OracleResult(plan, cost, True, (f"cost {cost} within budget {q.budget}",))
            return OracleResult(plan, cost, False, (f"cheapest valid plan costs {cost}, budget is {q.budget}",))
        complete, cost, plan = self._attempt(q, tuple(q.destination), strict=False)
        return OracleResult(plan, cost, False, ("no plan satisfies every constraint",))


def _describe(q: Query, res: OracleResult) -> str:
    lines = [f"Trip from {q.origin} visiting {', '.join(q.destination)} over {q.days} days "
             f"for {q.people_number} people, budget {q.budget}."]
    for e in res.plan.entries:
        if e.transportation != ABSENT:
            lines.append(f"Day {e.day}: {e.transportation}.")
    lines.append(f"Cheapest combination found costs {res.cost}.")
    lines.extend(res.notes)
    return "\n".join(lines) + "\n"


class OracleReasoner:
    role = "reasoner"

    def __init__(self, sandbox: Sandbox) -> None:
        self.planner = OraclePlanner(sandbox)

    def invoke(self, prompt: str) -> Completion:
        q = extract_query(prompt)
        res = self.planner.plan(q)
        text = f"<think>{_describe(q, res)}</think>{serialize_plan(res.plan)}"
        return Completion(text, count_tokens(prompt), count_tokens(text))


class OracleJudge:
    """Says "No errors." exactly when the answer passes every check."""

    role = "judge"

    def __init__(self, sandbox: Sandbox) -> None:
        self.sb = sandbox

    def invoke(self, prompt: str) -> Completion:
        q = extract_query(prompt)
        report = evaluate(self.sb, q, "<think>.</think>" + extract_answer(prompt))
        text = "No errors." if report.final_pass else "Errors exist."
        return Completion(text, count_tokens(prompt), count_tokens(text))


class OracleReflector:
    role = "reflector"

    def __init__(self, sandbox: Sandbox) -> None:
        self.sb = sandbox
        self.planner = OraclePlanner(sandbox)

    def invoke(self, prompt: str) -> Completion:
        q = extract_query(prompt)
        report = evaluate(self.sb, q, "<think>.</think>" + extract_answer(prompt))
        failed = [f"{r.name}: {r.detail}" for r in (*report.commonsense, *report.hard) if r.applicable and not r.passed]
        res = self.planner.plan(q)
        errors = "\n".join(f"- {f}" for f in failed) or "- the reasoning did not confirm every constraint"
        text = (f"Errors found:\n{errors}\nCorrection: rebuilt the plan from the cheapest valid options. "
                f"{' '.join(res.notes)}\nFinal answer:\n{serialize_plan(res.plan)}")
        return Completion(text, count_tokens(prompt), count_tokens(text))
