"""Deterministic synthetic travel sandbox.

The sandbox is the single source of truth for reference information and for
every validity check the evaluator performs.  It is generated from a seed,
persisted as one JSON document, and never mutated after construction.
"""

from __future__ import annotations

import datetime as dt
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

TRANSPORT_MODES = ("flight", "self-driving", "taxi")
ROOM_TYPES = ("entire room", "private room", "shared room", "not shared room")
HOUSE_RULES = ("no pets", "no smoking", "no parties", "no children under 10", "no visitors")
CUISINES = (
    "Chinese", "American", "Italian", "Mexican", "Indian",
    "Mediterranean", "French", "Japanese", "Thai", "BBQ",
)

# Trips are planned inside this window; flight availability is drawn from it.
DATE_WINDOW_START = dt.date(2022, 3, 1)
DATE_WINDOW_DAYS = 61


class SandboxError(ValueError):
    """Raised when a sandbox file cannot be parsed or violates an invariant."""


@dataclass(frozen=True)
class City:
    name: str
    state: str


@dataclass(frozen=True)
class TransportLink:
    origin: str
    destination: str
    mode: str
    cost: int
    duration: int
    flight_number: str | None = None
    date_availability: tuple[str, ...] = ()


@dataclass(frozen=True)
class Restaurant:
    name: str
    city: str
    cuisines: tuple[str, ...]
    avg_cost: int


@dataclass(frozen=True)
class Attraction:
    name: str
    city: str


@dataclass(frozen=True)
class Accommodation:
    name: str
    city: str
    room_type: str
    price_per_night: int
    house_rules: tuple[str, ...]
    max_occupancy: int
    min_nights: int


@dataclass(frozen=True)
class Sandbox:
    cities: tuple[City, ...]
    links: tuple[TransportLink, ...]
    restaurants: tuple[Restaurant, ...]
    attractions: tuple[Attraction, ...]
    accommodations: tuple[Accommodation, ...]
    seed: int
    _index: "_Index" = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        validate(self)
        object.__setattr__(self, "_index", _Index(self))

    # lookups used by query generation, the evaluator and the oracle agent

    @property
    def city_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.cities)

    def state_of(self, city: str) -> str:
        return self._index.state[city]

    def has_city(self, city: str) -> bool:
        return city in self._index.state

    def links_between(self, origin: str, destination: str) -> list[TransportLink]:
        return self._index.links.get((origin, destination), [])

    def flight(self, number: str) -> TransportLink | None:
        return self._index.flights.get(number)

    def restaurants_in(self, city: str) -> list[Restaurant]:
        return self._index.restaurants_by_city.get(city, [])

    def attractions_in(self, city: str) -> list[Attraction]:
        return self._index.attractions_by_city.get(city, [])

    def accommodations_in(self, city: str) -> list[Accommodation]:
        return self._index.accommodations_by_city.get(city, [])

    def restaurant(self, name: str, city: str) -> Restaurant | None:
        return self._index.restaurant.get((name, city))

    def attraction(self, name: str, city: str) -> Attraction | None:
        return self._index.attraction.get((name, city))

    def accommodation(self, name: str, city: str) -> Accommodation | None:
        return self._index.accommodation.get((name, city))

    def to_dict(self) -> dict:
        def rec(obj) -> dict:
            d = asdict(obj)
            for k, v in d.items():
                if isinstance(v, tuple):
                    d[k] = list(v)
            return d

        return {
            "cities": [rec(c) for c in self.cities],
            "links": [rec(link) for link in self.links],
            "restaurants": [rec(r) for r in self.restaurants],
            "attractions": [rec(a) for a in self.attractions],
            "accommodations": [rec(a) for a in self.accommodations],
            "seed": self.seed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n"


class _Index:
    def __init__(self, sb: Sandbox) -> None:
        self.state = {c.name: c.state for c in sb.cities}
        self.links: dict[tuple[str, str], list[TransportLink]] = {}
        self.flights: dict[str, TransportLink] = {}
        for link in sb.links:
            self.links.setdefault((link.origin, link.destination), []).append(link)
            if link.flight_number is not None:
                self.flights[link.flight_number] = link
        self.restaurants_by_city = _group(sb.restaurants)
        self.attractions_by_city = _group(sb.attractions)
        self.accommodations_by_city = _group(sb.accommodations)
        self.restaurant = {(r.name, r.city): r for r in sb.restaurants}
        self.attraction = {(a.name, a.city): a for a in sb.attractions}
        self.accommodation = {(a.name, a.city): a for a in sb.accommodations}


def _group(records: Iterable) -> dict[str, list]:
    out: dict[str, list] = {}
    for r in records:
        out.setdefault(r.city, []).append(r)
    return out


def validate(sb: Sandbox) -> None:
    """Check every type invariant and referential integrity; raise SandboxError naming the record."""
    names = [c.name for c in sb.cities]
    for i, c in enumerate(sb.cities):
        if not c.name:
            raise SandboxError(f"cities[{i}]: empty city name")
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise SandboxError(f"cities: duplicate city name {dup!r}")
    known = set(names)

    def need_city(kind: str, i: int, city: str) -> None:
        if city not in known:
            raise SandboxError(f"{kind}[{i}]: unknown city {city!r}")

    numbers, ground = set(), set()
    for i, link in enumerate(sb.links):
        need_city("links", i, link.origin)
        need_city("links", i, link.destination)
        if link.origin == link.destination:
            raise SandboxError(f"links[{i}]: origin equals destination")
        if link.mode not in TRANSPORT_MODES:
            raise SandboxError(f"links[{i}]: unknown mode {link.mode!r}")
        if link.cost < 0 or link.duration <= 0:
            raise SandboxError(f"links[{i}]: cost must be >= 0 and duration > 0")
        if (link.flight_number is not None) != (link.mode == "flight"):
            raise SandboxError(f"links[{i}]: flight_number present iff mode is flight")
        if link.mode != "flight" and link.date_availability:
            raise SandboxError(f"links[{i}]: date_availability only allowed on flights")
        if link.mode != "flight":
            if (link.origin, link.destination, link.mode) in ground:
                raise SandboxError(f"links[{i}]: duplicate {link.mode} link {link.origin} -> {link.destination}")
            ground.add((link.origin, link.destination, link.mode))
        if link.flight_number is not None:
            if link.flight_number in numbers:
                raise SandboxError(f"links[{i}]: duplicate flight number {link.flight_number}")
            numbers.add(link.flight_number)
            for d in link.date_availability:
                try:
                    dt.date.fromisoformat(d)
                except ValueError:
                    raise SandboxError(f"links[{i}]: bad date {d!r}") from None
    for kind in ("restaurants", "attractions", "accommodations"):
        seen = set()
        for i, rec in enumerate(getattr(sb, kind)):
            need_city(kind, i, rec.city)
            if (rec.name, rec.city) in seen:
                raise SandboxError(f"{kind}[{i}]: duplicate {rec.name!r} in {rec.city!r}")
            seen.add((rec.name, rec.city))
    for i, r in enumerate(sb.restaurants):
        if r.avg_cost < 0 or not r.cuisines:
            raise SandboxError(f"restaurants[{i}]: avg_cost must be >= 0 and cuisines non-empty")
    for i, a in enumerate(sb.accommodations):
        if a.room_type not in ROOM_TYPES:
            raise SandboxError(f"accommodations[{i}]: unknown room_type {a.room_type!r}")
        if a.price_per_night < 0 or a.max_occupancy < 1 or a.min_nights < 1:
            raise SandboxError(f"accommodations[{i}]: price/occupancy/min_nights out of range")


# ---------------------------------------------------------------------------
# generation

_PROFILES = {
    # states, cities per state, restaurants, attractions, accommodations (ranges per city)
    "tiny": dict(states=3, per_state=4, restaurants=(7, 10), attractions=(0, 5), accommodations=(4, 7)),
    "standard": dict(states=10, per_state=6, restaurants=(8, 14), attractions=(0, 8), accommodations=(5, 9)),
}

_ONSETS = ("B", "C", "D", "F", "G", "H", "K", "L", "M", "N", "P", "R", "S", "T", "V", "W", "Br", "Cl", "Gr", "St")
_VOWELS = ("a", "e", "i", "o", "u", "ay", "ea", "io")
_CODAS = ("n", "r", "l", "s", "th", "ck", "m", "rd", "nt", "")
_SUFFIXES = ("ton", "ville", " Falls", "burg", " City", "port", "field", " Springs", "dale", "wood")
_RESTAURANT_WORDS = ("Kitchen", "Bistro", "Diner", "Grill", "Cafe", "House", "Eatery", "Tavern")
_ATTRACTION_WORDS = ("Museum", "Park", "Gardens", "Gallery", "Aquarium", "Tower", "Market", "Zoo")
_LODGING_WORDS = ("Loft", "Cottage", "Suite", "Studio", "Retreat", "Apartment", "Inn", "Cabin")


def _word(rng: np.random.Generator) -> str:
    parts = [rng.choice(_ONSETS), rng.choice(_VOWELS), rng.choice(_CODAS)]
    if rng.random() < 0.5:
        parts += [rng.choice(("b", "d", "l", "m", "n", "r", "t")), rng.choice(_VOWELS)]
    return "".join(str(p) for p in parts)


def _unique(rng: np.random.Generator, make, taken: set[str]) -> str:
    while True:
        name = make()
        if name not in taken:
            taken.add(name)
            return name


def window_dates() -> list[str]:
    return [(DATE_WINDOW_START + dt.timedelta(days=i)).isoformat() for i in range(DATE_WINDOW_DAYS)]


def generate_sandbox(seed: int, profile: str = "tiny") -> Sandbox:
    """Build a sandbox deterministically from ``(seed, profile)``.

    Cities are grouped into states.  Every ordered pair inside a state gets a
    taxi and a self-driving link; cross-state pairs get flights and long
    drives only some of the time, so some trips are unreachable.
    """
    if profile not in _PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {sorted(_PROFILES)}")
    p = _PROFILES[profile]
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    taken: set[str] = set()

    cities: list[City] = []
    coords: dict[str, tuple[float, float]] = {}
    for s in range(p["states"]):
        state = _unique(rng, lambda: _word(rng).capitalize() + rng.choice(("ia", "a", "ota", "ana")), taken)
        cx, cy = rng.uniform(0, 3000, size=2)
        for _ in range(p["per_state"]):
            name = _unique(rng, lambda: _word(rng).capitalize() + str(rng.choice(_SUFFIXES)), taken)
            cities.append(City(name=name, state=state))
            coords[name] = (cx + rng.uniform(-150, 150), cy + rng.uniform(-150, 150))

    dates = window_dates()
    links: list[TransportLink] = []
    flight_counter = itertools.count(1)
    names = [c.name for c in cities]
    state = {c.name: c.state for c in cities}
    for a, b in itertools.combinations(names, 2):
        dist = math.dist(coords[a], coords[b])
        drive_min = max(30, int(dist / 1.1))
        same = state[a] == state[b]
        if same or rng.random() < 0.5:
            drive_cost = max(5, int(dist * 0.08))
            for o, d in ((a, b), (b, a)):
                links.append(TransportLink(o, d, "self-driving", drive_cost, drive_min))
        if same:
            taxi_cost = max(10, int(dist * 0.9))
            for o, d in ((a, b), (b, a)):
                links.append(TransportLink(o, d, "taxi", taxi_cost, drive_min))
        else:
            for o, d in ((a, b), (b, a)):
                if rng.random() < 0.75:
                    for _ in range(int(rng.integers(1, 3))):
                        avail = sorted(rng.choice(dates, size=int(rng.integers(25, 55)), replace=False).tolist())
                        links.append(TransportLink(
                            o, d, "flight",
                            cost=int(rng.integers(60, 180) + dist * 0.05),
                            duration=int(60 + dist / 9),
                            flight_number=f"F{next(flight_counter):04d}",
                            date_availability=tuple(avail),
                        ))

    restaurants: list[Restaurant] = []
    attractions: list[Attraction] = []
    accommodations: list[Accommodation] = []
    for c in names:
        for _ in range(int(rng.integers(*p["restaurants"], endpoint=True))):
            n_cuis = int(rng.integers(1, 4))
            cuis = sorted(rng.choice(CUISINES, size=n_cuis, replace=False).tolist())
            name = _unique(rng, lambda: f"{_word(rng).capitalize()} {rng.choice(_RESTAURANT_WORDS)}", taken)
            restaurants.append(Restaurant(name, c, tuple(cuis), int(rng.integers(10, 90))))
        for _ in range(int(rng.integers(*p["attractions"], endpoint=True))):
            name = _unique(rng, lambda: f"{_word(rng).capitalize()} {rng.choice(_ATTRACTION_WORDS)}", taken)
            attractions.append(Attraction(name, c))
        for _ in range(int(rng.integers(*p["accommodations"], endpoint=True))):
            rules = sorted(r for r in HOUSE_RULES if rng.random() < 0.3)
            name = _unique(rng, lambda: f"{_word(rng).capitalize()} {rng.choice(_LODGING_WORDS)}", taken)
            accommodations.append(Accommodation(
                name, c,
                room_type=str(rng.choice(ROOM_TYPES[:3])),
                price_per_night=int(rng.integers(40, 400)),
                house_rules=tuple(rules),
                max_occupancy=int(rng.integers(1, 7)),
                min_nights=int(rng.choice((1, 1, 1, 1, 2, 2, 3))),
            ))

    return Sandbox(
        cities=tuple(cities),
        links=tuple(links),
        restaurants=tuple(restaurants),
        attractions=tuple(attractions),
        accommodations=tuple(accommodations),
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# persistence

_KEYS = ("cities", "links", "restaurants", "attractions", "accommodations", "seed")


def sandbox_from_dict(data: dict) -> Sandbox:
    if not isinstance(data, dict):
        raise SandboxError("top-level value must be an object")
    missing = [k for k in _KEYS if k not in data]
    if missing:
        raise SandboxError(f"missing top-level keys: {missing}")

    def build(kind: str, cls, tuple_fields=()):
        out = []
        for i, raw in enumerate(data[kind]):
            if not isinstance(raw, dict):
                raise SandboxError(f"{kind}[{i}]: expected an object")
            try:
                kwargs = {k: (tuple(v) if k in tuple_fields else v) for k, v in raw.items()}
                out.append(cls(**kwargs))
            except TypeError as exc:
                raise SandboxError(f"{kind}[{i}]: {exc}") from None
        return tuple(out)

    return Sandbox(
        cities=build("cities", City),
        links=build("links", TransportLink, ("date_availability",)),
        restaurants=build("restaurants", Restaurant, ("cuisines",)),
        attractions=build("attractions", Attraction),
        accommodations=build("accommodations", Accommodation, ("house_rules",)),
        seed=int(data["seed"]),
    )


def save_sandbox(sandbox: Sandbox, path: str | Path) -> None:
    Path(path).write_text(sandbox.dumps(), encoding="utf-8")


def load_sandbox(path: str | Path) -> Sandbox:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SandboxError(f"{path}: JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return sandbox_from_dict(data)
