import json
import os
import stat

import pytest

from edvote import powcore, wire
from edvote.model import ErrorCode, ValidationError, VoteBlock
from edvote.voter import LocalEndpoint, ReceiptFile, VoterError, cast, self_verify

from conftest import END


def test_honest_cast(cast_vote, config):
    _, r = cast_vote("yes", powcore.MiningBudget(max_attempts=5000))
    assert r.achieved_zeros >= config.work_floor
    block = r.block()
    digest = powcore.hash_block(
        wire_block_prefix(config, block) + powcore.encode_nonce(block.nonce)
    )
    assert digest == r.acknowledgment.block_digest


def wire_block_prefix(config, block):
    from edvote.model import block_preimage

    return block_preimage(config, block)


def test_cast_floor_12_generous_budget(config, authority, platform, endpoint):
    from dataclasses import replace

    cfg = replace(config, work_floor=12)
    platform.config = cfg
    m = authority.issue_mandate(cfg, "c")
    r = cast(cfg, m, "no", powcore.MiningBudget(max_attempts=20000), endpoint)
    assert r.achieved_zeros >= 12


def test_invalid_choice_before_mining(config, authority):
    class Exploding:
        def request_stamp(self):
            raise AssertionError("should not reach the platform")

        def public_key(self):
            raise AssertionError

        submit = request_stamp

    m = authority.issue_mandate(config, "c")
    with pytest.raises(ValidationError) as exc:
        cast(config, m, "maybe", powcore.MiningBudget(max_attempts=1), Exploding())
    assert exc.value.code is ErrorCode.INVALID_CHOICE


def test_replayed_cast(config, authority, endpoint):
    m = authority.issue_mandate(config, "c")
    cast(config, m, "yes", powcore.MiningBudget(max_attempts=1), endpoint)
    with pytest.raises(ValidationError) as exc:
        cast(config, m, "yes", powcore.MiningBudget(max_attempts=1), endpoint)
    assert exc.value.code is ErrorCode.DUPLICATE_MANDATE


def test_bad_ack_detected(config, authority, platform, clock, tmp_path):
    class Lying(LocalEndpoint):
        def submit(self, submission):
            ack = super().submit(submission)
            return type(ack)(ack.block_digest, bytes(64))

    m = authority.issue_mandate(config, "c")
    out = tmp_path / "r.json"
    with pytest.raises(VoterError) as exc:
        cast(config, m, "yes", powcore.MiningBudget(max_attempts=1), Lying(platform, clock), receipt_out=out)
    assert exc.value.code == "ACK_INVALID"
    assert not out.exists()


def test_receipt_file_round_trip_and_permissions(cast_vote, tmp_path):
    out = tmp_path / "receipt.json"
    _, r = cast_vote("no", receipt_out=out)
    assert stat.S_IMODE(os.stat(out).st_mode) == 0o600
    assert ReceiptFile.load(out) == r
    assert "voter_secret" in json.loads(out.read_text())


def test_self_verify(cast_vote, platform):
    receipts = [cast_vote(v)[1] for v in ("yes", "no", "yes")]
    published = [platform.publish_final(END + 1)]
    assert all(self_verify(r, published) for r in receipts)


def test_self_verify_detects_altered_vote(cast_vote, platform):
    _, r = cast_vote("yes")
    unit = platform.publish_final(END + 1)
    b = unit.list_b[0]
    altered = VoteBlock("yeS", b.receipt, b.nonce)
    tampered = type(unit)(unit.list_a, [altered], None)
    assert not self_verify(r, [tampered])


def test_self_verify_other_election(cast_vote, config, authority):
    from dataclasses import replace

    from edvote.authority import keygen
    from edvote.platform import Platform
    from conftest import Clock, START

    _, mine = cast_vote("yes")
    other_cfg = replace(config, election_id=b"\xab" * 16)
    other = Platform(other_cfg, keygen(b"\x08" * 32), authority.public_key)
    m = authority.issue_mandate(other_cfg, "someone")
    cast(other_cfg, m, "yes", powcore.MiningBudget(max_attempts=1), LocalEndpoint(other, Clock(START + 20)))
    assert not self_verify(mine, [other.publish_final(END + 1)])


def test_self_verify_only_own_record(cast_vote, platform):
    receipts = [cast_vote("yes")[1] for _ in range(6)]
    unit = platform.publish_final(END + 1)
    for r in receipts:
        owned = [b for b in unit.list_b if self_verify(r, [type(unit)([], [b], None)])]
        assert len(owned) == 1


def test_secret_never_on_the_wire(config, authority, platform, clock):
    seen = []

    class Recording(LocalEndpoint):
        def submit(self, submission):
            seen.append(json.dumps(wire.submission_to_json(submission)))
            return super().submit(submission)

    m = authority.issue_mandate(config, "c")
    r = cast(config, m, "yes", powcore.MiningBudget(max_attempts=1), Recording(platform, clock))
    unit = platform.publish_final(END + 1)
    published = json.dumps(wire.published_to_json(unit))
    secret_hex = r.voter_secret.secret.hex()
    assert secret_hex not in seen[0]
    assert secret_hex not in published
