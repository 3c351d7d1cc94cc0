"""Hand-scored responses over the mini world.

Each expected total is written as the arithmetic a person would do on paper:
commonsense passes / 8 + imposed hard passes / imposed hard count +/- 0.5.
The pass counts come from reading the defect against the mini world, not
from running the evaluator.
"""

import json

from mini_world import GOOD, edited, make_query

REFLECT = ("I picked flights and the cheapest meals. REFLECTION(Now, I need to reflect on whether there are any "
           "errors in my reasoning above): No errors. The reflection is over, now IMMEDIATELY output the final "
           "answer!")
PLAIN = "I picked flights and the cheapest meals."


def wrap(think: str, plan) -> str:
    return "<think>" + think + "</think>" + (plan if isinstance(plan, str) else json.dumps(plan))


Q = make_query()

# (label, query, response, expected total)
FIXTURES = [
    # format failures
    ("empty", Q, "", -1.0),
    ("no tags", Q, json.dumps(GOOD), -1.0),
    ("no close tag", Q, "<think>" + REFLECT + json.dumps(GOOD), -1.0),
    ("text before open tag", Q, "ok " + wrap(REFLECT, GOOD), -1.0),
    ("two close tags", Q, "<think>a</think>b" + wrap(REFLECT, GOOD)[7:], -1.0),
    ("empty tail", Q, wrap(REFLECT, "  \n"), -1.0),
    ("tail not json", Q, wrap(REFLECT, "Day 1: fly to Bville"), -1.0),
    ("empty array", Q, wrap(REFLECT, "[]"), -1.0),
    ("object not array", Q, wrap(REFLECT, json.dumps(GOOD[0])), -1.0),
    ("missing key", Q, wrap(REFLECT, [{k: v for k, v in GOOD[0].items() if k != "dinner"}]), -1.0),
    ("day as string", Q, wrap(REFLECT, [{**GOOD[0], "day": "1"}]), -1.0),
    ("days skip", Q, wrap(REFLECT, [GOOD[0], GOOD[2]]), -1.0),
    ("truncated json", Q, wrap(REFLECT, json.dumps(GOOD)[:-5]), -1.0),
    # well-formed
    ("perfect with reflection", Q, wrap(REFLECT, GOOD), 8 / 8 + 2 / 2 + 0.5),
    ("perfect without reflection", Q, wrap(PLAIN, GOOD), 8 / 8 + 2 / 2 - 0.5),
    ("perfect in code fence", Q, wrap(REFLECT, "```json\n" + json.dumps(GOOD) + "\n```"), 8 / 8 + 2 / 2 + 0.5),
    ("empty think", Q, wrap("", GOOD), 8 / 8 + 2 / 2 - 0.5),
    ("over budget", make_query(budget=753), wrap(REFLECT, GOOD), 8 / 8 + 1 / 2 + 0.5),
    ("repeated restaurant", Q, wrap(PLAIN, edited(d2_lunch="Lu Diner, Bville")), 7 / 8 + 2 / 2 - 0.5),
    ("flight on wrong route", Q,
     wrap(REFLECT, edited(d1_transportation="Flight Number: F0002, from Aton to Bville")), 7 / 8 + 2 / 2 + 0.5),
    ("mixed flight and driving", Q,
     wrap(PLAIN, edited(d3_transportation="Self-driving, from Bville to Aton")), 7 / 8 + 2 / 2 - 0.5),
    ("short stay", Q, wrap(REFLECT, edited(d2_accommodation="Loft Two, Bville")), 7 / 8 + 2 / 2 + 0.5),
    ("unknown restaurant", Q, wrap(PLAIN, edited(d2_breakfast="Ghost Diner, Bville")), 6 / 8 + 1 / 2 - 0.5),
    ("teleport", Q, wrap(REFLECT, edited(d2_current_city="Cdale")), 6 / 8 + 2 / 2 + 0.5),
    ("missing dinner", Q, wrap(PLAIN, edited(d2_dinner="-")), 7 / 8 + 2 / 2 - 0.5),
    ("two days only", Q, wrap(REFLECT, GOOD[:2]), 6 / 8 + 2 / 2 + 0.5),
    ("lodging in wrong city", Q, wrap(PLAIN, edited(d1_accommodation="C Inn, Cdale")), 7 / 8 + 2 / 2 - 0.5),
    ("unreadable transport", Q, wrap(REFLECT, edited(d3_transportation="by camel")), 6 / 8 + 1 / 2 + 0.5),
    ("cuisine missed", make_query(cuisine="Japanese"), wrap(PLAIN, GOOD), 8 / 8 + 1 / 2 - 0.5),
    ("rule and type violated", make_query(house_rule="pets", room_type="shared room"), wrap(REFLECT, GOOD),
     8 / 8 + 2 / 4 + 0.5),
    ("every hard check failed", make_query(budget=753, cuisine="Japanese", transportation="no flight"),
     wrap(PLAIN, GOOD), 8 / 8 + 0 / 3 - 0.5),
    ("all four constraints met", make_query(house_rule="smoking", room_type="not shared room",
                                            transportation="no self-driving"),
     wrap(REFLECT, GOOD), 8 / 8 + 5 / 5 + 0.5),
    ("marker only at the start", Q,
     wrap("REFLECTION: fine. " + "Then I compared every flight and every meal option. " * 20, GOOD),
     8 / 8 + 2 / 2 - 0.5),
    ("marker with nothing after it", Q, wrap(PLAIN + " REFLECTION", GOOD), 8 / 8 + 2 / 2 - 0.5),
]
