import random
from pathlib import Path

import dotenv
import pytest

from lasco_engine.history.graph import build_system_graph
from lasco_engine.history.lsh import parse_history
from lasco_engine.history.model import ObjectSnapshot, SystemEvent, SystemHistory
from lasco_engine.lang.policy import parse_policy_file

dotenv.load_dotenv()

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def p1():
    """Separation of duty: a purchase requested and approved by the same team."""
    return parse_policy_file((FIXTURES / "p1.lasco").read_text(), source="p1")[0]


@pytest.fixture
def h1():
    return parse_history((FIXTURES / "h1.lsh").read_text())


@pytest.fixture
def s1(h1):
    return build_system_graph(h1)


@pytest.fixture
def corpus():
    return parse_policy_file((FIXTURES / "corpus.lasco").read_text(), source="corpus")


def _random_history(seed: int, objects: int = 4, events: int = 6, times: int = 4) -> SystemHistory:
    """Small user/purchase history: every object at time 0, a few later team changes, random events."""
    rng = random.Random(seed)
    ids = [f"o{i}" for i in range(objects)]
    snapshots = [
        ObjectSnapshot(
            object_id=object_id,
            time=0,
            attrs={"class": rng.choice(["user", "purchase"]), "team": rng.choice(["team1", "team2"])},
        )
        for object_id in ids
    ]
    for object_id in rng.sample(ids, k=rng.randint(0, objects // 2)):
        snapshots.append(
            ObjectSnapshot(object_id=object_id, time=rng.randint(1, times), attrs={"team": rng.choice(["team1", "team2"])})
        )
    records = [
        SystemEvent(
            event_id=f"e{i}",
            src=rng.choice(ids),
            dst=rng.choice(ids),
            time=rng.randint(1, times),
            attrs={"name": rng.choice(["request", "approve"])},
        )
        for i in range(events)
    ]
    return SystemHistory.from_records(snapshots, records)


@pytest.fixture
def make_history():
    return _random_history
