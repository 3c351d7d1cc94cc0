import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from imagine.query_gen import generate_queries  # noqa: E402
from imagine.sandbox import generate_sandbox  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def sandbox():
    return generate_sandbox(42, "tiny")


@pytest.fixture(scope="session")
def queries(sandbox):
    return generate_queries(sandbox, 90, seed=7)


@pytest.fixture(scope="session")
def oracle_planner(sandbox):
    from imagine.mas.oracle import OraclePlanner
    return OraclePlanner(sandbox)


@pytest.fixture(scope="session")
def feasible_pair(queries, oracle_planner):
    """First query whose oracle plan fits its budget, with that plan."""
    for q, _ in queries:
        res = oracle_planner.plan(q)
        if res.feasible:
            return q, res.plan
    raise AssertionError("no feasible query in the fixture corpus")
