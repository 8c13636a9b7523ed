import random

import pytest

from edvote import powcore
from edvote.authority import Authority, keygen
from edvote.model import ElectionConfig
from edvote.platform import Platform
from edvote.voter import LocalEndpoint, cast

START = 1_700_000_000
END = START + 86_400


class Clock:
    def __init__(self, t):
        self.t = t

    def __call__(self):
        return self.t


@pytest.fixture
def config():
    return ElectionConfig(
        election_id=bytes(range(16)),
        ballot_choices=("yes", "no"),
        voting_window=(START, END),
        work_floor=8,
        stamp_ttl=3600,
    )


@pytest.fixture
def clock():
    return Clock(START + 10)


@pytest.fixture
def authority():
    return Authority(keygen(b"\x01" * 32))


@pytest.fixture
def platform(config, authority):
    return Platform(config, keygen(b"\x02" * 32), authority.public_key)


@pytest.fixture
def endpoint(platform, clock):
    return LocalEndpoint(platform, clock)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def cast_vote(config, authority, endpoint):
    """Issue a mandate and cast through the in-process platform."""
    counter = iter(range(10**6))

    def _cast(vote="yes", budget=powcore.MiningBudget(max_attempts=1), **kw):
        mandate = authority.issue_mandate(config, f"citizen-{next(counter)}")
        return mandate, cast(config, mandate, vote, budget, endpoint, **kw)

    return _cast


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
