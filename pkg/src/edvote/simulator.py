"""Seeded in-process elections with optional adversaries.

Every random choice (votes, budgets, tokens, stamps, secrets, shuffles,
keys) is drawn from streams derived from ``Scenario.seed``, and time is a
virtual clock, so the same scenario always produces the same report.
"""

from __future__ import annotations

import hashlib
import random
import threading
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import powcore, wire
from .auditor import AuditReport, audit, forgery_budget
from .authority import Authority, keygen
from .model import (
    ElectionConfig,
    ErrorCode,
    Mandate,
    PlatformStamp,
    PublishedLists,
    Receipt,
    ValidationError,
    VoteBlock,
    TOKEN_SIZE,
    Keypair,
)
from .platform import Platform
from .voter import (
    LocalEndpoint,
    PreparedBallot,
    ReceiptFile,
    check_ack,
    prepare_ballot,
    self_verify,
)

ADVERSARIES = ("NONE", "PRECOMPUTE", "MANDATE_REUSE", "TAMPER_PUBLISHED", "THROW_IN")


@dataclass(frozen=True)
class Adversary:
    kind: str = "NONE"
    bits_to_flip: int = 1
    extra_mandates: int = 0

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise ValueError(f"unknown adversary {self.kind!r}")
        if self.bits_to_flip < 0 or self.extra_mandates < 0:
            raise ValueError("adversary parameters must be non-negative")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "TAMPER_PUBLISHED":
            out["bits_to_flip"] = self.bits_to_flip
        if self.kind == "THROW_IN":
            out["extra_mandates"] = self.extra_mandates
        return out

    @classmethod
    def from_json(cls, obj) -> "Adversary":
        if isinstance(obj, str):
            return cls(obj)
        return cls(
            obj.get("kind", "NONE"),
            obj.get("bits_to_flip", 1),
            obj.get("extra_mandates", 0),
        )


@dataclass(frozen=True)
class Scenario:
    seed: int
    n_voters: int
    config: ElectionConfig
    vote_distribution: dict[str, float] = field(default_factory=dict)
    budget_distribution: tuple[tuple[powcore.MiningBudget, float], ...] = (
        (powcore.MiningBudget(max_attempts=4096), 1.0),
    )
    adversary: Adversary = Adversary()

    def __post_init__(self):
        if self.n_voters < 1:
            raise ValueError("n_voters must be >= 1")
        if not self.vote_distribution:
            k = len(self.config.ballot_choices)
            object.__setattr__(
                self, "vote_distribution", {c: 1.0 / k for c in self.config.ballot_choices}
            )
        dist = self.vote_distribution
        if any(c not in self.config.ballot_choices for c in dist):
            raise ValueError("vote_distribution names an unknown choice")
        if any(p < 0 for p in dist.values()) or abs(sum(dist.values()) - 1.0) > 1e-9:
            raise ValueError("vote probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "budget_distribution", tuple(self.budget_distribution))
        if not self.budget_distribution or any(w <= 0 for _, w in self.budget_distribution):
            raise ValueError("budget_distribution needs positive weights")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_voters": self.n_voters,
            "config": wire.config_to_json(self.config),
            "vote_distribution": dict(self.vote_distribution),
            "budget_distribution": [[b.to_json(), w] for b, w in self.budget_distribution],
            "adversary": self.adversary.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        seed = int(obj["seed"])
        cfg = dict(obj.get("config", {}))
        cfg.setdefault("election_id", _derive(seed, "election-id")[:16].hex())
        cfg.setdefault("ballot_choices", ["yes", "no"])
        cfg.setdefault("voting_window", [1_700_000_000, 1_700_086_400])
        budgets = obj.get("budget_distribution")
        return cls(
            seed=seed,
            n_voters=int(obj["n_voters"]),
            config=wire.config_from_json(cfg),
            vote_distribution=obj.get("vote_distribution", {}),
            budget_distribution=tuple(
                (powcore.MiningBudget.from_json(b), float(w)) for b, w in budgets
            )
            if budgets
            else cls.budget_distribution,
            adversary=Adversary.from_json(obj.get("adversary", "NONE")),
        )


@dataclass
class VoterOutcome:
    accepted: bool
    error: str | None
    achieved_zeros: int | None
    self_verified: bool = False

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "error": self.error,
            "achieved_zeros": self.achieved_zeros,
            "self_verified": self.self_verified,
        }


@dataclass
class AdversaryOutcome:
    attempted: int = 0
    succeeded: int = 0
    detected: bool = False
    rejections: Counter = field(default_factory=Counter)

    def to_json(self) -> dict:
        return {
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "detected": self.detected,
            "rejections": dict(sorted(self.rejections.items())),
        }


@dataclass
class SimReport:
    ground_truth_tally: dict[str, int]
    audit_report: AuditReport
    per_voter: list[VoterOutcome]
    adversary_outcome: AdversaryOutcome
    published: list[PublishedLists]
    attempted_submissions: int = 0
    rejected_submissions: int = 0

    @property
    def accepted_count(self) -> int:
        """Acceptances across honest voters and adversary bots."""
        return self.attempted_submissions - self.rejected_submissions

    def zeros_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.audit_report.zeros).items()))

    def to_json(self) -> dict:
        return {
            "ground_truth_tally": self.ground_truth_tally,
            "audit_report": self.audit_report.to_json(),
            "per_voter": [v.to_json() for v in self.per_voter],
            "adversary_outcome": self.adversary_outcome.to_json(),
            "submissions": {
                "attempted": self.attempted_submissions,
                "rejected": self.rejected_submissions,
            },
        }


def _derive(seed: int, label: str) -> bytes:
    return hashlib.sha256(f"edvote-sim:{seed}:{label}".encode()).digest()


class _Clock:
    def __init__(self, t: float):
        self.t = t

    def __call__(self) -> float:
        return self.t


def mutate_block(block: VoteBlock, rng: random.Random) -> VoteBlock:
    """Flip one uniformly chosen bit of a published block record.

    The bit ranges over the vote text (UTF-8), the 100-octet platform stamp,
    the voter stamp and the 8-octet nonce. Vote octets that stop being valid
    UTF-8 are decoded with replacement characters, as a JSON publisher would.
    """
    vote = block.vote.encode("utf-8")
    stamp = block.receipt.platform_stamp.encode()
    voter_stamp = block.receipt.voter_stamp
    nonce = powcore.encode_nonce(block.nonce)
    fields = [bytearray(vote), bytearray(stamp), bytearray(voter_stamp), bytearray(nonce)]
    total_bits = sum(8 * len(f) for f in fields)
    bit = rng.randrange(total_bits)
    for f in fields:
        if bit < 8 * len(f):
            f[bit // 8] ^= 0x80 >> (bit % 8)
            break
        bit -= 8 * len(f)
    new_vote = bytes(fields[0]).decode("utf-8", errors="replace")
    new_stamp = PlatformStamp.decode(bytes(fields[1]))
    return VoteBlock(
        new_vote,
        Receipt(new_stamp, bytes(fields[2])),
        int.from_bytes(bytes(fields[3]), "big"),
    )


def tamper_published(
    units: Sequence[PublishedLists], bits: int, rng: random.Random
) -> list[PublishedLists]:
    out = [PublishedLists(list(u.list_a), list(u.list_b), u.chunk_index) for u in units]
    slots = [(ui, bi) for ui, u in enumerate(out) for bi in range(len(u.list_b))]
    if not slots:
        return out
    for _ in range(bits):
        ui, bi = rng.choice(slots)
        blocks = list(out[ui].list_b)
        blocks[bi] = mutate_block(blocks[bi], rng)
        out[ui] = PublishedLists(out[ui].list_a, blocks, out[ui].chunk_index)
    return out


class _Election:
    """Wiring for one simulated run; each method drives public operations only."""

    def __init__(self, scenario: Scenario):
        s = scenario
        self.scenario = s
        self.config = cfg = s.config
        seed = s.seed
        self.choice_rng = random.Random(f"{seed}:choices")
        self.crypto_rng = random.Random(f"{seed}:crypto")
        self.adv_rng = random.Random(f"{seed}:adversary")
        self.clock = _Clock(cfg.start)
        self.authority = Authority(
            keygen(_derive(seed, "authority")), randbytes=self.crypto_rng.randbytes, clock=self.clock
        )
        self.platform = Platform(
            cfg,
            keygen(_derive(seed, "platform")),
            self.authority.public_key,
            randbytes=self.crypto_rng.randbytes,
            shuffler=random.Random(f"{seed}:shuffle"),
        )
        self.endpoint = LocalEndpoint(self.platform, self.clock)
        self.attempted = 0
        self.rejected = 0
        self._count_lock = threading.Lock()

    def time_for(self, i: int, n: int) -> float:
        cfg = self.config
        span = cfg.end - cfg.start
        return cfg.start + span * (i + 1) // (n + 2)

    def pick_budget(self) -> powcore.MiningBudget:
        budgets, weights = zip(*self.scenario.budget_distribution)
        return self.choice_rng.choices(budgets, weights)[0]

    def prepare(self, mandate: Mandate, vote: str, budget) -> PreparedBallot:
        stamp = self.endpoint.request_stamp()
        return prepare_ballot(
            self.config, mandate, vote, stamp, budget, randbytes=self.crypto_rng.randbytes
        )

    def submit(self, prepared: PreparedBallot):
        """Returns (receipt, None) or (None, error code)."""
        with self._count_lock:
            self.attempted += 1
        try:
            ack = self.endpoint.submit(prepared.submission)
        except ValidationError as exc:
            with self._count_lock:
                self.rejected += 1
            return None, exc.code.value
        check_ack(prepared, ack, self.platform.public_key)
        return prepared.receipt(ack), None


def run(scenario: Scenario) -> SimReport:
    el = _Election(scenario)
    cfg = scenario.config
    adv = scenario.adversary
    n = scenario.n_voters
    outcome = AdversaryOutcome()

    choices = list(scenario.vote_distribution)
    weights = [scenario.vote_distribution[c] for c in choices]
    intended = [el.choice_rng.choices(choices, weights)[0] for _ in range(n)]
    budgets = [el.pick_budget() for _ in range(n)]
    mandates = []
    for i in range(n):
        el.clock.t = cfg.start
        mandates.append(el.authority.issue_mandate(cfg, f"citizen-{i:06d}"))

    if adv.kind == "PRECOMPUTE":
        _precompute_attack(el, outcome)

    receipts: list[ReceiptFile | None] = []
    per_voter: list[VoterOutcome] = []
    for i in range(n):
        el.clock.t = el.time_for(i, n)
        if adv.kind == "MANDATE_REUSE":
            receipt, outcome_i = _cast_twice(el, mandates[i], intended[i], budgets[i], outcome)
        else:
            prepared = el.prepare(mandates[i], intended[i], budgets[i])
            receipt, err = el.submit(prepared)
            outcome_i = VoterOutcome(receipt is not None, err, prepared.achieved_zeros)
        receipts.append(receipt)
        per_voter.append(outcome_i)

    if adv.kind == "THROW_IN":
        _throw_in(el, adv.extra_mandates, outcome)

    el.clock.t = cfg.end + 1
    published = el.platform.publish_due(el.clock.t)
    audited = published
    if adv.kind == "TAMPER_PUBLISHED":
        audited = tamper_published(published, adv.bits_to_flip, el.adv_rng)
        outcome.attempted = adv.bits_to_flip

    eligible = el.authority.eligible_count(cfg.election_id)
    report = audit(audited, el.authority.public_key, el.platform.public_key, cfg, eligible)

    for r, v in zip(receipts, per_voter):
        v.self_verified = r is not None and self_verify(r, audited)

    if adv.kind == "TAMPER_PUBLISHED":
        outcome.detected = not report.passed
        outcome.succeeded = 0 if outcome.detected else outcome.attempted
    elif adv.kind == "THROW_IN":
        outcome.detected = not report.passed

    truth = dict.fromkeys(cfg.ballot_choices, 0)
    for vote, v in zip(intended, per_voter):
        if v.accepted:
            truth[vote] += 1
    return SimReport(
        ground_truth_tally=truth,
        audit_report=report,
        per_voter=per_voter,
        adversary_outcome=outcome,
        published=audited,
        attempted_submissions=el.attempted,
        rejected_submissions=el.rejected,
    )


def _precompute_attack(el: _Election, outcome: AdversaryOutcome) -> None:
    """Bots holding authority-issued mandates submit blocks mined ahead of time.

    Half use stamps fabricated before the window (signed with a key the
    platform never used); half use genuine stamps held past their TTL.
    """
    cfg = el.config
    k = max(2, el.scenario.n_voters // 10)
    forger = Keypair.generate(_derive(el.scenario.seed, "forger"))
    budget = powcore.MiningBudget(max_attempts=1)
    stale_submit_at = cfg.start + cfg.stamp_ttl + 1
    plans = []
    for j in range(k):
        el.clock.t = cfg.start
        mandate = el.authority.issue_mandate(cfg, f"bot-{j:06d}")
        vote = el.adv_rng.choice(cfg.ballot_choices)
        if j % 2 == 1 and stale_submit_at <= cfg.end:
            stamp = el.endpoint.request_stamp()
            submit_at = stale_submit_at
        else:
            epoch = max(cfg.start - 3600, 0)
            fresh = el.adv_rng.randbytes(16)
            sig = forger.sign(PlatformStamp.signed_payload(cfg.election_id, epoch, fresh))
            stamp = PlatformStamp(cfg.election_id, epoch, fresh, sig)
            submit_at = cfg.start + 1
        prepared = prepare_ballot(
            cfg, mandate, vote, stamp, budget, randbytes=el.adv_rng.randbytes
        )
        plans.append((submit_at, prepared))
    for submit_at, prepared in plans:
        el.clock.t = submit_at
        outcome.attempted += 1
        receipt, err = el.submit(prepared)
        if receipt is not None:
            outcome.succeeded += 1
        else:
            outcome.rejections[err] += 1
    outcome.detected = outcome.attempted > 0 and outcome.succeeded == 0


def _cast_twice(el: _Election, mandate, vote, budget, outcome: AdversaryOutcome):
    """Submit two independently mined blocks under one mandate at the same instant."""
    first = el.prepare(mandate, vote, budget)
    second = el.prepare(mandate, vote, budget)
    results: list = [None, None]
    barrier = threading.Barrier(2)

    def go(idx, prepared):
        barrier.wait()
        results[idx] = el.submit(prepared)

    threads = [threading.Thread(target=go, args=(i, p)) for i, p in enumerate((first, second))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    outcome.attempted += 1
    won = [i for i in (0, 1) if results[i][0] is not None]
    for i in (0, 1):
        err = results[i][1]
        if err is not None:
            outcome.rejections[err] += 1
    outcome.succeeded += max(0, len(won) - 1)
    outcome.detected = outcome.rejections[ErrorCode.DUPLICATE_MANDATE.value] == outcome.attempted
    if not won:
        return None, VoterOutcome(False, results[0][1], first.achieved_zeros)
    winner = (first, second)[won[0]]
    return results[won[0]][0], VoterOutcome(True, None, winner.achieved_zeros)


def _throw_in(el: _Election, k: int, outcome: AdversaryOutcome) -> None:
    """The authority signs unlogged tokens and has bots vote with them."""
    cfg = el.config
    budget = powcore.MiningBudget(max_attempts=1)
    el.clock.t = cfg.end
    for _ in range(k):
        token = el.adv_rng.randbytes(TOKEN_SIZE)
        mandate = el.authority.sign_token(token, cfg.election_id)
        vote = el.adv_rng.choice(cfg.ballot_choices)
        prepared = el.prepare(mandate, vote, budget)
        outcome.attempted += 1
        receipt, err = el.submit(prepared)
        if receipt is not None:
            outcome.succeeded += 1
        else:
            outcome.rejections[err] += 1


def deterrence_curve(
    zeros_histogram: dict[int, int], hashrates: Sequence[int], seconds: int
) -> list[tuple[int, Fraction]]:
    """Fraction of blocks re-mineable within ``seconds`` at each hashrate."""
    zeros = [z for z, count in sorted(zeros_histogram.items()) for _ in range(count)]
    return [(h, forgery_budget(zeros, h, seconds).forgeable_fraction) for h in hashrates]


def write_curve_csv(path, curve: Sequence[tuple[int, Fraction]]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["hashrate", "fraction"])
        for h, frac in curve:
            w.writerow([h, f"{float(frac):.6f}"])
