import datetime as dt
import json
from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imagine.query_gen import (
    CONSTRAINT_KINDS, ExhaustionError, Query, QueryGenConfig, UnknownCityError, budget_lower_bound,
    build_reference_information, generate_queries, render_query_text, validate_query,
)
from imagine.sandbox import DATE_WINDOW_DAYS, DATE_WINDOW_START

ALLOWED = {"easy": {0}, "medium": {1}, "hard": {2, 3}}
CITIES_FOR_DAYS = {3: 1, 5: 2, 7: 3}


def check_laws(sb, q: Query) -> None:
    assert CITIES_FOR_DAYS[q.days] == q.visiting_city_number == len(q.destination)
    assert len(set(q.destination)) == len(q.destination)
    assert q.origin not in q.destination
    assert all(sb.has_city(c) for c in (q.origin, *q.destination))
    window_end = DATE_WINDOW_START + dt.timedelta(days=DATE_WINDOW_DAYS - 1)
    days = [dt.date.fromisoformat(d) for d in q.date]
    assert len(days) == q.days
    assert all(b - a == dt.timedelta(days=1) for a, b in zip(days, days[1:]))
    assert DATE_WINDOW_START <= days[0] and days[-1] <= window_end
    assert q.people_number >= 1 and q.budget > 0
    declared = [k for k, v in q.local_constraint.items() if v is not None]
    assert len(declared) in ALLOWED[q.level]
    assert set(q.local_constraint) == set(CONSTRAINT_KINDS)
    assert q.query_text == render_query_text(q)


def reference_by_scan(sb, q: Query) -> dict:
    """Reference information rebuilt by scanning the raw sandbox dict."""
    raw = sb.to_dict()
    stops = [q.origin, *q.destination, q.origin]
    transportation = []
    for i, (a, b) in enumerate(zip(stops, stops[1:])):
        date = q.date[2 * i]
        options = []
        for link in raw["links"]:
            if link["origin"] != a or link["destination"] != b:
                continue
            if link["mode"] == "flight" and date not in link["date_availability"]:
                continue
            rec = {k: link[k] for k in ("origin", "destination", "mode", "cost", "duration")}
            if link["mode"] == "flight":
                rec["flight_number"] = link["flight_number"]
                rec["date_availability"] = link["date_availability"]
            options.append(rec)
        transportation.append({"segment": f"from {a} to {b}", "date": date, "options": options})
    cities = {}
    for c in (q.origin, *q.destination):
        cities[c] = {kind: [r for r in raw[kind] if r["city"] == c]
                     for kind in ("restaurants", "attractions", "accommodations")}
    return {"transportation": transportation, "cities": cities}


def test_corpus_obeys_every_law(sandbox, queries):
    assert len(queries) == 90
    keys = [q.dedup_key() for q, _ in queries]
    assert len(set(keys)) == 90
    for q, _ in queries:
        check_laws(sandbox, q)
        validate_query(q)


def test_grid_is_balanced(queries):
    cells = Counter((q.days, q.level) for q, _ in queries)
    assert set(cells.values()) == {10}


def test_reference_information_is_closed_and_complete(sandbox, queries):
    for q, ref in queries:
        assert ref == reference_by_scan(sandbox, q)


def test_some_hard_queries_undercut_the_lower_bound(sandbox, queries):
    under = [q for q, _ in queries if q.budget < budget_lower_bound(sandbox, q)]
    assert under
    assert all(q.level == "hard" for q in under)


def test_same_seed_same_queries(sandbox, queries):
    again = generate_queries(sandbox, 90, seed=7)
    assert [q for q, _ in again] == [q for q, _ in queries]
    assert [q.query_text for q, _ in again] == [q.query_text for q, _ in queries]


def test_existing_keys_are_avoided(sandbox, queries):
    taken = {q.dedup_key() for q, _ in queries}
    more = generate_queries(sandbox, 90, seed=8, existing=taken)
    assert not taken & {q.dedup_key() for q, _ in more}


def test_exhaustion_is_reported(sandbox):
    cfg = QueryGenConfig(level_mix={(3, "easy"): 1.0}, people_choices=(1,), start_dates=1, stall_limit=200)
    with pytest.raises(ExhaustionError, match="no new distinct query"):
        generate_queries(sandbox, 1000, seed=1, config=cfg)


def test_count_must_be_positive(sandbox):
    with pytest.raises(ValueError):
        generate_queries(sandbox, 0, seed=1)


def test_unknown_city_in_reference(sandbox, queries):
    q = replace(queries[0][0], origin="Atlantis")
    with pytest.raises(UnknownCityError):
        build_reference_information(sandbox, q)


def test_json_round_trip(queries):
    for q, ref in queries[:10]:
        d = json.loads(json.dumps(q.to_json(ref)))
        assert d["reference_information"] == ref
        assert Query.from_json(d) == q


def _example(**kw) -> Query:
    base = dict(origin="Aton", destination=("Bville",), days=3, visiting_city_number=1,
                date=("2022-03-05", "2022-03-06", "2022-03-07"), people_number=1,
                local_constraint={k: None for k in CONSTRAINT_KINDS}, budget=1400, level="easy")
    base.update(kw)
    return Query(**base)


def test_render_easy():
    assert render_query_text(_example()) == (
        "Please plan a 3-day trip for 1 person departing from Aton and visiting Bville "
        "from March 5th to March 7th, 2022, with a budget of $1,400."
    )


def test_render_constraint_clauses():
    lc = {k: None for k in CONSTRAINT_KINDS}
    lc.update({"cuisine": "Mexican", "transportation": "no flight", "room type": "not shared room"})
    q = _example(destination=("Bville", "Cdale"), days=5, visiting_city_number=2, people_number=3,
                 date=tuple(f"2022-03-{d:02d}" for d in range(21, 26)), local_constraint=lc, level="hard",
                 budget=12345)
    assert render_query_text(q) == (
        "Please plan a 5-day trip for 3 people departing from Aton and visiting Bville and Cdale "
        "from March 21st to March 25th, 2022, with a budget of $12,345, where we would like to try Mexican "
        "cuisine, we need a room that is not shared and we cannot take any flights."
    )


def test_render_budget_only_difference():
    a, b = render_query_text(_example(budget=1400)), render_query_text(_example(budget=2100))
    assert a.replace("$1,400", "$2,100") == b


def test_validate_rejects_wrong_level():
    lc = {k: None for k in CONSTRAINT_KINDS}
    lc["cuisine"] = "Thai"
    with pytest.raises(ValueError, match="level"):
        validate_query(_example(local_constraint=lc, level="easy"))


def test_validate_rejects_origin_as_destination():
    with pytest.raises(ValueError, match="origin"):
        validate_query(_example(destination=("Aton",)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), count=st.integers(1, 30))
def test_generated_queries_obey_laws(sandbox, seed, count):
    out = generate_queries(sandbox, count, seed=seed)
    assert len(out) == count
    assert len({q.dedup_key() for q, _ in out}) == count
    for q, ref in out:
        check_laws(sandbox, q)
        assert set(ref["cities"]) == {q.origin, *q.destination}
