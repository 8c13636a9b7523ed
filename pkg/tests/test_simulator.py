import json
import random
from fractions import Fraction

import pytest

from edvote import wire
from edvote.model import ElectionConfig
from edvote.simulator import (
    Adversary,
    Scenario,
    deterrence_curve,
    mutate_block,
    run,
    write_curve_csv,
)

START = 1_700_000_000


def scenario(kind="NONE", n=30, seed=1, floor=8, chunk=None, **adv):
    cfg = ElectionConfig(
        bytes(16), ("yes", "no", "abstain"), (START, START + 86_400), work_floor=floor,
        chunk_interval=chunk,
    )
    return Scenario(seed=seed, n_voters=n, config=cfg, adversary=Adversary(kind, **adv))


def test_honest_run():
    rep = run(scenario())
    a = rep.audit_report
    assert a.passed and a.list_a == a.list_b == 30
    assert a.tally == rep.ground_truth_tally
    assert all(v.accepted and v.self_verified for v in rep.per_voter)
    assert rep.accepted_count == a.list_b


def test_reproducible():
    first = json.dumps(run(scenario(seed=5)).to_json(), sort_keys=True)
    second = json.dumps(run(scenario(seed=5)).to_json(), sort_keys=True)
    assert first == second
    assert first != json.dumps(run(scenario(seed=6)).to_json(), sort_keys=True)


def test_chunked_run():
    rep = run(scenario(chunk=3600))
    assert rep.audit_report.passed
    assert len(rep.published) > 2
    assert all(v.self_verified for v in rep.per_voter)


def test_precompute_rejected():
    rep = run(scenario("PRECOMPUTE"))
    out = rep.adversary_outcome
    assert out.attempted >= 2 and out.succeeded == 0 and out.detected
    assert set(out.rejections) <= {"UNKNOWN_STAMP", "STALE_STAMP"}
    assert sum(out.rejections.values()) == out.attempted
    assert rep.audit_report.passed


def test_mandate_reuse():
    rep = run(scenario("MANDATE_REUSE", n=20))
    out = rep.adversary_outcome
    assert sum(v.accepted for v in rep.per_voter) == 20
    assert out.rejections == {"DUPLICATE_MANDATE": 20}
    assert out.succeeded == 0 and out.detected
    assert rep.audit_report.passed


def test_tamper_detected():
    rep = run(scenario("TAMPER_PUBLISHED", bits_to_flip=1))
    assert not rep.audit_report.passed
    assert rep.adversary_outcome.detected


@pytest.mark.parametrize("k", [0, 1, 3])
def test_throw_in(k):
    rep = run(scenario("THROW_IN", extra_mandates=k))
    a = rep.audit_report
    assert a.list_a == 30 + k
    assert a.eligible == 30
    assert a.passed == (k == 0)
    assert rep.adversary_outcome.detected == (k >= 1)


@pytest.mark.parametrize("kind", ["NONE", "PRECOMPUTE", "MANDATE_REUSE", "THROW_IN"])
def test_conservation(kind):
    rep = run(scenario(kind, n=10, extra_mandates=2))
    assert rep.accepted_count + rep.rejected_submissions == rep.attempted_submissions
    assert rep.accepted_count == rep.audit_report.list_b


def test_mutate_block_changes_exactly_one_bit():
    rep = run(scenario(n=3))
    block = rep.published[0].list_b[0]
    rng = random.Random(0)
    for _ in range(50):
        m = mutate_block(block, rng)
        assert m != block


def test_deterrence_curve():
    assert deterrence_curve({12: 100}, [4096], 10) == [(4096, Fraction(1, 10))]
    assert deterrence_curve({12: 100}, [0], 10) == [(0, 0)]
    curve = deterrence_curve({10: 5, 12: 20, 14: 3}, [2**10, 2**12, 2**14, 2**16], 3)
    fracs = [f for _, f in curve]
    assert fracs == sorted(fracs)


def test_curve_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_curve_csv(path, deterrence_curve({12: 100}, [4096, 8192], 10))
    assert path.read_text().splitlines() == ["hashrate,fraction", "4096,0.100000", "8192,0.200000"]


def test_scenario_json_round_trip():
    s = scenario("THROW_IN", extra_mandates=2)
    again = Scenario.from_json(json.loads(json.dumps(s.to_json())))
    assert again == s


@pytest.mark.parametrize(
    "bad",
    [
        {"n_voters": 0},
        {"vote_distribution": {"yes": 0.5, "no": 0.4}},
        {"vote_distribution": {"maybe": 1.0}},
        {"adversary": {"kind": "ALIENS"}},
    ],
)
def test_scenario_validation(bad):
    doc = {"seed": 1, "n_voters": 3, **bad}
    with pytest.raises(ValueError):
        Scenario.from_json(doc)
