"""Random plan perturbations for differential and property tests."""

from __future__ import annotations

import copy
import random

from imagine.plan import PLAN_KEYS

FIELDS = PLAN_KEYS[1:]


def _random_item(rng: random.Random, records) -> str:
    r = rng.choice(records)
    return f"{r.name}, {r.city}"


def _random_transport(rng: random.Random, sb) -> str:
    link = rng.choice(sb.links)
    label = {"flight": f"Flight Number: {link.flight_number}", "self-driving": "Self-driving", "taxi": "Taxi"}[link.mode]
    return f"{label}, from {link.origin} to {link.destination}"


def mutate(plan: list[dict], sb, rng: random.Random, n: int) -> list[dict]:
    """Apply ``n`` random edits to a copy of ``plan`` (a list of day dicts)."""
    p = copy.deepcopy(plan)
    cities = list(sb.city_names)
    for _ in range(n):
        op = rng.randrange(16)
        if not p:
            break
        d = rng.choice(p)
        if op == 0:
            d[rng.choice(("breakfast", "lunch", "dinner"))] = _random_item(rng, sb.restaurants)
        elif op == 1:
            d[rng.choice(FIELDS)] = rng.choice(["-", ""])
        elif op == 2:
            d["attraction"] = rng.choice(["Nowhere Park, " + rng.choice(cities),
                                          _random_item(rng, sb.attractions),
                                          _random_item(rng, sb.attractions) + ";" + _random_item(rng, sb.attractions)])
        elif op == 3:
            d["accommodation"] = _random_item(rng, sb.accommodations)
        elif op == 4:
            d["transportation"] = _random_transport(rng, sb)
        elif op == 5:
            d["current_city"] = rng.choice([rng.choice(cities), f"from {rng.choice(cities)} to {rng.choice(cities)}"])
        elif op == 6 and len(p) > 1:
            p.pop(rng.randrange(len(p)))
        elif op == 7:
            p.append(copy.deepcopy(rng.choice(p)))
        elif op == 8:
            d["transportation"] = rng.choice(["Flight Number: X9999, from A to B", "by boat", "Taxi from A to B",
                                              "Taxi, from Atlantis to " + rng.choice(cities)])
        elif op == 9:
            src = rng.choice(p)
            slot = rng.choice(("breakfast", "lunch", "dinner"))
            d[rng.choice(("breakfast", "lunch", "dinner"))] = src[slot]
        elif op == 10:
            d[rng.choice(("breakfast", "lunch", "dinner", "accommodation"))] = rng.choice(
                ["Nameless", "Ghost Diner, " + rng.choice(cities), ", " + rng.choice(cities)])
        elif op == 11:
            t = d["transportation"]
            if "," not in t:
                continue
            if t.startswith("Flight"):
                d["transportation"] = "Self-driving" + t[t.index(","):]
            elif t.startswith(("Self-driving", "Taxi")):
                d["transportation"] = "Taxi" + t[t.index(","):]
        elif op == 12:
            a, b = rng.sample(range(len(p)), 2) if len(p) > 1 else (0, 0)
            p[a]["accommodation"], p[b]["accommodation"] = p[b]["accommodation"], p[a]["accommodation"]
        elif op == 13:
            d["current_city"] = "-"
        elif op == 14:
            i = rng.randrange(len(p))
            if i + 1 < len(p):
                p[i + 1]["accommodation"] = p[i]["accommodation"]
        else:
            d["transportation"] = "-"
    for i, d in enumerate(p, start=1):
        d["day"] = i
    return p
