"""Synthetic travel query generation over a sandbox.

Queries are framed from sandbox elements (origin, destinations, dates,
party size), then shaped by duration (3/5/7 days visiting 1/2/3 cities) and
difficulty (number of local constraints).  Every query is deduplicated on a
key tuple and paired with reference information projected from the sandbox.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .sandbox import CUISINES, DATE_WINDOW_DAYS, DATE_WINDOW_START, Sandbox

DURATIONS = {3: 1, 5: 2, 7: 3}
LEVELS = ("easy", "medium", "hard")
CONSTRAINT_KINDS = ("house rule", "cuisine", "room type", "transportation")
HOUSE_RULE_VALUES = ("pets", "smoking", "parties", "children under 10", "visitors")
ROOM_TYPE_VALUES = ("entire room", "private room", "shared room", "not shared room")
TRANSPORT_VALUES = ("no flight", "no self-driving")
BUDGET_BAND = 500


class UnknownCityError(KeyError):
    pass


class ExhaustionError(RuntimeError):
    """The sandbox cannot supply the requested number of distinct queries."""


@dataclass(frozen=True)
class Query:
    origin: str
    destination: tuple[str, ...]
    days: int
    visiting_city_number: int
    date: tuple[str, ...]
    people_number: int
    local_constraint: dict
    budget: int
    level: str
    query_text: str = ""

    def __hash__(self) -> int:
        return hash(self.dedup_key())

    def dedup_key(self) -> "DedupKey":
        return DedupKey.of(self)

    @property
    def query_id(self) -> str:
        return self.dedup_key().digest()

    def constraint(self, kind: str) -> str | None:
        return self.local_constraint.get(kind)

    def n_constraints(self) -> int:
        return sum(v is not None for v in self.local_constraint.values())

    def to_json(self, reference_information: dict | None = None) -> dict:
        d = {
            "origin": self.origin,
            "destination": list(self.destination),
            "days": self.days,
            "visiting_city_number": self.visiting_city_number,
            "date": list(self.date),
            "people_number": self.people_number,
            "local_constraint": {k: self.local_constraint.get(k) for k in CONSTRAINT_KINDS},
            "budget": self.budget,
            "level": self.level,
            "query": self.query_text,
        }
        if reference_information is not None:
            d["reference_information"] = reference_information
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Query":
        return cls(
            origin=d["origin"],
            destination=tuple(d["destination"]),
            days=int(d["days"]),
            visiting_city_number=int(d["visiting_city_number"]),
            date=tuple(d["date"]),
            people_number=int(d["people_number"]),
            local_constraint={k: d["local_constraint"].get(k) for k in CONSTRAINT_KINDS},
            budget=int(d["budget"]),
            level=d["level"],
            query_text=d.get("query", ""),
        )


@dataclass(frozen=True)
class DedupKey:
    origin: str
    destination: tuple[str, ...]
    date_range: tuple[str, str]
    people_number: int
    local_constraint: tuple[tuple[str, str], ...]
    budget_band: int

    @classmethod
    def of(cls, q: Query) -> "DedupKey":
        return cls(
            origin=q.origin,
            destination=tuple(sorted(q.destination)),
            date_range=(q.date[0], q.date[-1]),
            people_number=q.people_number,
            local_constraint=tuple(sorted((k, str(v)) for k, v in q.local_constraint.items() if v is not None)),
            budget_band=q.budget // BUDGET_BAND,
        )

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


def validate_query(q: Query) -> None:
    if DURATIONS.get(q.days) != q.visiting_city_number:
        raise ValueError(f"(days, visiting_city_number)=({q.days}, {q.visiting_city_number}) not allowed")
    if len(q.destination) != q.visiting_city_number or len(set(q.destination)) != len(q.destination):
        raise ValueError("destination must list visiting_city_number distinct cities")
    if q.origin in q.destination:
        raise ValueError("origin must not be a destination")
    if len(q.date) != q.days:
        raise ValueError("date must list one date per day")
    ds = [dt.date.fromisoformat(d) for d in q.date]
    if any((b - a).days != 1 for a, b in zip(ds, ds[1:])):
        raise ValueError("dates must be consecutive")
    if q.people_number < 1:
        raise ValueError("people_number must be positive")
    if set(q.local_constraint) - set(CONSTRAINT_KINDS):
        raise ValueError(f"unknown local constraint kinds {set(q.local_constraint) - set(CONSTRAINT_KINDS)}")
    n = q.n_constraints()
    if q.level not in LEVELS or not level_allows(q.level, n):
        raise ValueError(f"level {q.level!r} does not allow {n} local constraints")


def level_allows(level: str, n_constraints: int) -> bool:
    return {"easy": (0,), "medium": (1,), "hard": (2, 3)}[level].__contains__(n_constraints)


# ---------------------------------------------------------------------------
# itinerary helpers shared with the oracle agent


def itinerary(q: Query, order: Sequence[str] | None = None) -> list[tuple[str, str, str]]:
    """Segments ``(from, to, date)`` of the standard schedule: two nights per city."""
    cities = [q.origin, *(order or q.destination), q.origin]
    return [(a, b, q.date[2 * i]) for i, (a, b) in enumerate(zip(cities, cities[1:]))]


def transport_options(sb: Sandbox, origin: str, destination: str, date: str | None) -> list:
    out = []
    for link in sb.links_between(origin, destination):
        if link.mode == "flight" and date is not None and date not in link.date_availability:
            continue
        out.append(link)
    return out


def rooms_needed(people: int, max_occupancy: int) -> int:
    return math.ceil(people / max_occupancy)


def budget_lower_bound(sb: Sandbox, q: Query) -> int:
    """A cost no valid plan for ``q`` can undercut.

    Takes the cheapest link of any mode on any date for each leg (minimised
    over destination orders), the cheapest room-night in any city of the trip
    for every night but the last day, and the cheapest meal for the meals
    every full day requires.  Legs with no link at all contribute nothing.
    """
    people = q.people_number
    best_transport = math.inf
    for order in itertools.permutations(q.destination):
        cities = [q.origin, *order, q.origin]
        total = 0
        for a, b in zip(cities, cities[1:]):
            costs = [link.cost * (people if link.mode == "flight" else 1) for link in sb.links_between(a, b)]
            total += min(costs) if costs else 0
        best_transport = min(best_transport, total)
    nights = q.days - 1
    trip = (q.origin, *q.destination)
    room = [a.price_per_night * rooms_needed(people, a.max_occupancy) for c in trip for a in sb.accommodations_in(c)]
    meal = [r.avg_cost for c in trip for r in sb.restaurants_in(c)]
    full_days = q.days - q.visiting_city_number - 1
    return int(best_transport + (min(room) if room else 0) * nights + (min(meal) if meal else 0) * people * 3 * full_days)


def budget_estimate(sb: Sandbox, q: Query) -> int:
    """Greedy cost of the standard schedule in query order, ignoring local constraints.

    Cheapest option per leg on its date, cheapest room for two nights per
    city, cheapest three restaurants per city.
    """
    people = q.people_number
    total = 0
    for a, b, date in itinerary(q):
        costs = [link.cost * (people if link.mode == "flight" else 1) for link in transport_options(sb, a, b, date)]
        total += min(costs) if costs else 0
    for c in q.destination:
        rooms = [a.price_per_night * rooms_needed(people, a.max_occupancy) for a in sb.accommodations_in(c)]
        total += 2 * (min(rooms) if rooms else 0)
        total += sum(sorted(r.avg_cost for r in sb.restaurants_in(c))[:3]) * people
    return total


# ---------------------------------------------------------------------------
# reference information


def _transport_record(link) -> dict:
    d = {"origin": link.origin, "destination": link.destination, "mode": link.mode,
         "cost": link.cost, "duration": link.duration}
    if link.mode == "flight":
        d["flight_number"] = link.flight_number
        d["date_availability"] = list(link.date_availability)
    return d


def build_reference_information(sb: Sandbox, q: Query) -> dict:
    for c in (q.origin, *q.destination):
        if not sb.has_city(c):
            raise UnknownCityError(c)
    transportation = []
    for a, b, date in itinerary(q):
        transportation.append({
            "segment": f"from {a} to {b}",
            "date": date,
            "options": [_transport_record(link) for link in transport_options(sb, a, b, date)],
        })
    cities = {}
    for c in (q.origin, *q.destination):
        cities[c] = {
            "restaurants": [{"name": r.name, "city": r.city, "cuisines": list(r.cuisines), "avg_cost": r.avg_cost}
                            for r in sb.restaurants_in(c)],
            "attractions": [{"name": a.name, "city": a.city} for a in sb.attractions_in(c)],
            "accommodations": [{"name": a.name, "city": a.city, "room_type": a.room_type,
                                "price_per_night": a.price_per_night, "house_rules": list(a.house_rules),
                                "max_occupancy": a.max_occupancy, "min_nights": a.min_nights}
                               for a in sb.accommodations_in(c)],
        }
    return {"transportation": transportation, "cities": cities}


# ---------------------------------------------------------------------------
# natural-language rendering


def _ordinal(n: int) -> str:
    suffix = "th" if 11 <= n % 100 <= 13 else {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def _fmt_date(iso: str) -> str:
    d = dt.date.fromisoformat(iso)
    return f"{d.strftime('%B')} {_ordinal(d.day)}"


def _join(items: Sequence[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


_CLAUSES = {
    "house rule": lambda v: f"the accommodation must allow {v}",
    "cuisine": lambda v: f"we would like to try {v} cuisine",
    "room type": lambda v: "we need a room that is not shared" if v == "not shared room" else f"we need a {v}",
    "transportation": lambda v: "we cannot take any flights" if v == "no flight" else "we cannot drive ourselves",
}


def render_query_text(q: Query) -> str:
    who = "1 person" if q.people_number == 1 else f"{q.people_number} people"
    year = dt.date.fromisoformat(q.date[0]).year
    text = (
        f"Please plan a {q.days}-day trip for {who} departing from {q.origin} and visiting "
        f"{_join(list(q.destination))} from {_fmt_date(q.date[0])} to {_fmt_date(q.date[-1])}, {year}, "
        f"with a budget of ${q.budget:,}"
    )
    clauses = [_CLAUSES[k](v) for k, v in ((k, q.local_constraint.get(k)) for k in CONSTRAINT_KINDS) if v is not None]
    if clauses:
        text += ", where " + _join(clauses)
    return text + "."


# ---------------------------------------------------------------------------
# generation


@dataclass
class QueryGenConfig:
    level_mix: dict = field(default_factory=lambda: {(d, lv): 1.0 for d in DURATIONS for lv in LEVELS})
    people_choices: tuple[int, ...] = (1, 2, 3, 4, 5)
    start_dates: int = DATE_WINDOW_DAYS  # number of candidate start days from the window start
    infeasible_fraction: float = 0.25  # share of hard queries whose budget undercuts the lower bound
    stall_limit: int = 5000


def _cell_schedule(count: int, mix: dict, rng: np.random.Generator) -> list[tuple[int, str]]:
    """Largest-remainder allocation of ``count`` over the (days, level) grid, shuffled."""
    cells = sorted(mix)
    w = np.array([mix[c] for c in cells], dtype=float)
    w = w / w.sum()
    raw = w * count
    base = np.floor(raw).astype(int)
    rest = count - int(base.sum())
    for i in np.argsort(-(raw - base), kind="stable")[:rest]:
        base[i] += 1
    schedule = [c for c, n in zip(cells, base) for _ in range(n)]
    return [schedule[i] for i in rng.permutation(len(schedule))]


def _sample_constraints(sb: Sandbox, level: str, rng: np.random.Generator) -> dict:
    n = {"easy": 0, "medium": 1, "hard": int(rng.choice((2, 3)))}[level]
    kinds = set(rng.choice(CONSTRAINT_KINDS, size=n, replace=False).tolist()) if n else set()
    cuisines = sorted({c for r in sb.restaurants for c in r.cuisines}) or list(CUISINES)
    pools = {"house rule": HOUSE_RULE_VALUES, "cuisine": cuisines, "room type": ROOM_TYPE_VALUES,
             "transportation": TRANSPORT_VALUES}
    return {k: (str(rng.choice(pools[k])) if k in kinds else None) for k in CONSTRAINT_KINDS}


def _sample_query(sb: Sandbox, days: int, level: str, cfg: QueryGenConfig, rng: np.random.Generator) -> Query:
    k = DURATIONS[days]
    states: dict[str, list[str]] = {}
    for c in sb.cities:
        states.setdefault(c.state, []).append(c.name)
    dest_states = sorted(s for s, cs in states.items() if len(cs) >= k)
    dest_state = dest_states[int(rng.integers(len(dest_states)))]
    dest = tuple(str(c) for c in rng.choice(states[dest_state], size=k, replace=False))
    origins = [c.name for c in sb.cities if c.state != dest_state] or [c.name for c in sb.cities if c.name not in dest]
    origin = origins[int(rng.integers(len(origins)))]
    last_start = min(cfg.start_dates, DATE_WINDOW_DAYS - days + 1)
    start = DATE_WINDOW_START + dt.timedelta(days=int(rng.integers(last_start)))
    dates = tuple((start + dt.timedelta(days=i)).isoformat() for i in range(days))
    people = int(rng.choice(cfg.people_choices))
    constraints = _sample_constraints(sb, level, rng)
    draft = Query(origin, dest, days, k, dates, people, constraints, 0, level)
    floor = budget_lower_bound(sb, draft)
    if level == "hard" and rng.random() < cfg.infeasible_fraction:
        budget = int(math.floor(floor * rng.uniform(0.6, 0.95)))
    else:
        base = max(budget_estimate(sb, draft), floor, 1)
        budget = int(math.ceil(base * rng.uniform(1.2, 2.5) / 10.0) * 10)
    q = Query(origin, dest, days, k, dates, people, constraints, budget, level)
    return replace(q, query_text=render_query_text(q))


def generate_queries(
    sb: Sandbox,
    count: int,
    seed: int,
    existing: Iterable[DedupKey] = (),
    config: QueryGenConfig | None = None,
    render: Callable[[Query], str] | None = None,
) -> list[tuple[Query, dict]]:
    """Generate ``count`` distinct queries with their reference information.

    Raises ExhaustionError when ``config.stall_limit`` consecutive draws all
    collide with already-taken keys.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = config or QueryGenConfig()
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    taken = set(existing)
    out = []
    for days, level in _cell_schedule(count, cfg.level_mix, rng):
        for _ in range(cfg.stall_limit):
            q = _sample_query(sb, days, level, cfg, rng)
            key = q.dedup_key()
            if key not in taken:
                break
        else:
            raise ExhaustionError(
                f"no new distinct query after {cfg.stall_limit} draws ({len(out)} of {count} generated)"
            )
        taken.add(key)
        if render is not None:
            q = replace(q, query_text=render(q))
        out.append((q, build_reference_information(sb, q)))
    return out
