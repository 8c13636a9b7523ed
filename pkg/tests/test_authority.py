import json
import threading

import pytest

from edvote.authority import AlreadyIssued, Authority, keygen
from edvote.model import verify_mandate


def test_keygen():
    assert keygen().public_key != keygen().public_key
    assert keygen(b"\x01" * 32) == keygen(b"\x01" * 32)
    kp = keygen()
    from edvote.model import verify_signature

    assert verify_signature(kp.public_key, kp.sign(b"hello"), b"hello")


def test_issue_once_per_citizen(config, authority):
    m = authority.issue_mandate(config, "c1")
    assert verify_mandate(m, authority.public_key)
    assert m.election_id == config.election_id
    with pytest.raises(AlreadyIssued):
        authority.issue_mandate(config, "c1")


def test_same_citizen_different_election(config, authority):
    authority.issue_mandate(config, "c1")
    authority.issue_mandate(b"\xee" * 16, "c1")
    assert authority.eligible_count(config.election_id) == 1
    assert authority.eligible_count() == 2


def test_eligible_count(config, authority):
    assert authority.eligible_count(config.election_id) == 0
    for ref in ("a", "b", "c"):
        authority.issue_mandate(config, ref)
    with pytest.raises(AlreadyIssued):
        authority.issue_mandate(config, "b")
    assert authority.eligible_count(config.election_id) == 3


def test_ten_thousand_distinct_tokens(config):
    auth = Authority(keygen(b"\x04" * 32))
    tokens = {auth.issue_mandate(config, f"c{i}").token for i in range(10_000)}
    assert len(tokens) == 10_000


def test_concurrent_issue_same_citizen(config, authority):
    results = []
    barrier = threading.Barrier(32)

    def go():
        barrier.wait()
        try:
            results.append(authority.issue_mandate(config, "same"))
        except AlreadyIssued:
            results.append(None)

    threads = [threading.Thread(target=go) for _ in range(32)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(r is not None for r in results) == 1
    assert authority.eligible_count(config.election_id) == 1


def test_log_persists_and_reloads(tmp_path, config):
    log = tmp_path / "issuance.jsonl"
    kp = keygen(b"\x06" * 32)
    a = Authority(kp, log)
    a.issue_mandate(config, "alice")
    a.issue_mandate(config, "bob")
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert [x["citizen_ref"] for x in lines] == ["alice", "bob"]
    b = Authority(kp, log)
    assert b.eligible_count(config.election_id) == 2
    with pytest.raises(AlreadyIssued):
        b.issue_mandate(config, "alice")


def test_mandate_json_has_no_citizen_ref(config, authority):
    from edvote import wire

    doc = wire.mandate_to_json(authority.issue_mandate(config, "secret-person"))
    assert "secret-person" not in json.dumps(doc)
    assert set(doc) == {"token", "election_id", "authority_signature"}
