import threading
from collections import Counter

import pytest
from fastapi.testclient import TestClient

from edvote import powcore, wire
from edvote.model import ErrorCode, ValidationError
from edvote.service import STATUS_BY_CODE, create_authority_app, create_platform_app
from edvote.voter import HttpEndpoint, cast, prepare_ballot, self_verify

from conftest import END, START


@pytest.fixture
def client(platform, clock):
    return TestClient(create_platform_app(platform, clock))


@pytest.fixture
def http(client):
    return HttpEndpoint("http://testserver", client=client)


def test_statuses_are_distinct():
    assert len(set(STATUS_BY_CODE.values())) == len(STATUS_BY_CODE)


def test_pubkey_and_stamp(client, platform, config):
    assert client.get("/pubkey").json() == {"public_key": platform.public_key.hex()}
    stamp = wire.stamp_from_json(client.post("/stamp").json())
    assert stamp.election_id == config.election_id
    assert wire.config_from_json(client.get("/config").json()) == config


def test_cast_over_http_and_publish(http, client, authority, config, clock):
    m = authority.issue_mandate(config, "c")
    r = cast(config, m, "yes", powcore.MiningBudget(max_attempts=1), http)
    with pytest.raises(ValidationError) as exc:
        cast(config, m, "no", powcore.MiningBudget(max_attempts=1), http)
    assert exc.value.code is ErrorCode.DUPLICATE_MANDATE

    assert client.get("/published").json() == []
    clock.t = END + 1
    units = http.published()
    assert len(units) == 1 and len(units[0].list_b) == 1
    assert self_verify(r, units)


def test_error_status_codes(client, authority, config):
    m = authority.issue_mandate(config, "c")
    stamp = wire.stamp_from_json(client.post("/stamp").json())
    sub = prepare_ballot(config, m, "yes", stamp, powcore.MiningBudget(max_attempts=1)).submission
    body = wire.submission_to_json(sub)
    assert client.post("/submit", json=body).status_code == 200
    resp = client.post("/submit", json=body)
    assert resp.status_code == STATUS_BY_CODE[ErrorCode.DUPLICATE_MANDATE]
    assert resp.json()["code"] == "DUPLICATE_MANDATE"
    resp = client.post("/submit", json={"mandate": {}, "block": {}})
    assert resp.status_code == 400 and resp.json()["code"] == "MALFORMED_INPUT"


def test_stamp_outside_window(client, clock):
    clock.t = START - 10
    resp = client.post("/stamp")
    assert resp.status_code == 403 and resp.json()["code"] == "OUTSIDE_WINDOW"


def test_concurrent_http_submissions(client, authority, config):
    m = authority.issue_mandate(config, "c")
    bodies = []
    for _ in range(20):
        stamp = wire.stamp_from_json(client.post("/stamp").json())
        sub = prepare_ballot(config, m, "no", stamp, powcore.MiningBudget(max_attempts=1)).submission
        bodies.append(wire.submission_to_json(sub))
    codes = []
    barrier = threading.Barrier(len(bodies))

    def go(body):
        barrier.wait()
        resp = client.post("/submit", json=body)
        codes.append(resp.json().get("code", "OK"))

    threads = [threading.Thread(target=go, args=(b,)) for b in bodies]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert Counter(codes) == {"OK": 1, "DUPLICATE_MANDATE": 19}


def test_authority_mandate_endpoint(authority, config):
    c = TestClient(create_authority_app(authority, config))
    resp = c.post("/mandate", json={"citizen_ref": "alice"})
    assert resp.status_code == 200
    m = wire.mandate_from_json(resp.json())
    assert m.election_id == config.election_id
    again = c.post("/mandate", json={"citizen_ref": "alice"})
    assert again.status_code == 409 and again.json()["code"] == "ALREADY_ISSUED"
    assert c.post("/mandate", json={}).status_code == 400
    assert c.get("/pubkey").json()["public_key"] == authority.public_key.hex()
