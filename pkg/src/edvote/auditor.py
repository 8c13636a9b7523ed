"""Independent audit of published lists: signatures, work, tally, forgery budget.

An auditor sees only what anyone can see: the published units, the two
public keys and the election configuration.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import powcore
from .model import (
    ElectionConfig,
    PublishedLists,
    VoteBlock,
    block_zeros,
    stamp_in_window,
    verify_voted_mandate,
)

BAD_MANDATE_SIGNATURE = "BAD_MANDATE_SIGNATURE"
DUPLICATE_TOKEN = "DUPLICATE_TOKEN"
INSUFFICIENT_WORK = "INSUFFICIENT_WORK"
BAD_STAMP = "BAD_STAMP"
USED_STAMP = "USED_STAMP"
DUPLICATE_VOTER_STAMP = "DUPLICATE_VOTER_STAMP"
INVALID_CHOICE = "INVALID_CHOICE"
UNIT_LENGTH_MISMATCH = "UNIT_LENGTH_MISMATCH"


class UnknownChoice(ValueError):
    code = "UNKNOWN_CHOICE"


@dataclass(frozen=True, order=True)
class Locator:
    unit: int
    list_name: str
    index: int

    def __str__(self):
        return f"unit{self.unit}/{self.list_name}/{self.index}"


@dataclass(frozen=True, order=True)
class Failure:
    locator: Locator
    kind: str

    def to_json(self) -> dict:
        return {"record": str(self.locator), "kind": self.kind}


@dataclass
class AuditReport:
    list_a: int
    list_b: int
    eligible: int | None
    failures: list[Failure]
    total_work: int
    tally: dict[str, int]
    zeros: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.failures
            and self.list_a == self.list_b
            and (self.eligible is None or self.list_a <= self.eligible)
        )

    def failure_kinds(self) -> Counter:
        return Counter(f.kind for f in self.failures)

    def to_json(self) -> dict:
        return {
            "counts": {"list_a": self.list_a, "list_b": self.list_b, "eligible": self.eligible},
            "failures": [f.to_json() for f in self.failures],
            # a JSON number loses precision past 2**53
            "total_work": str(self.total_work),
            "tally": dict(self.tally),
            "zeros_histogram": {str(z): n for z, n in sorted(Counter(self.zeros).items())},
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ForgeryAssessment:
    adversary_hash_budget: int
    forgeable_count: int
    forgeable_fraction: Fraction

    def to_json(self) -> dict:
        return {
            "adversary_hash_budget": str(self.adversary_hash_budget),
            "forgeable_count": self.forgeable_count,
            "forgeable_fraction": float(self.forgeable_fraction),
            "forgeable_fraction_exact": str(self.forgeable_fraction),
        }


def tally(blocks: Iterable[VoteBlock], config: ElectionConfig) -> dict[str, int]:
    counts = dict.fromkeys(config.ballot_choices, 0)
    for b in blocks:
        if b.vote not in counts:
            raise UnknownChoice(f"{b.vote!r} is not a ballot choice")
        counts[b.vote] += 1
    return counts


def audit(
    published: Sequence[PublishedLists],
    authority_pk: bytes,
    platform_pk: bytes,
    config: ElectionConfig,
    eligible: int | None = None,
) -> AuditReport:
    failures: list[Failure] = []
    seen_tokens: dict[bytes, Locator] = {}
    seen_voter_stamps: set[bytes] = set()
    seen_fresh: set[bytes] = set()
    zeros: list[int] = []
    countable: list[VoteBlock] = []
    n_a = n_b = 0

    for u, unit in enumerate(published):
        if len(unit.list_a) != len(unit.list_b):
            failures.append(Failure(Locator(u, "unit", 0), UNIT_LENGTH_MISMATCH))
        for i, rec in enumerate(unit.list_a):
            loc = Locator(u, "a", i)
            n_a += 1
            if not verify_voted_mandate(rec, config.election_id, authority_pk):
                failures.append(Failure(loc, BAD_MANDATE_SIGNATURE))
            if rec.token in seen_tokens:
                failures.append(Failure(loc, DUPLICATE_TOKEN))
            else:
                seen_tokens[rec.token] = loc
        for i, block in enumerate(unit.list_b):
            loc = Locator(u, "b", i)
            n_b += 1
            z = block_zeros(config, block)
            zeros.append(z)
            if z < config.work_floor:
                failures.append(Failure(loc, INSUFFICIENT_WORK))
            stamp = block.receipt.platform_stamp
            if not stamp_in_window(stamp, platform_pk, config):
                failures.append(Failure(loc, BAD_STAMP))
            if stamp.fresh in seen_fresh:
                failures.append(Failure(loc, USED_STAMP))
            seen_fresh.add(stamp.fresh)
            if block.receipt.voter_stamp in seen_voter_stamps:
                failures.append(Failure(loc, DUPLICATE_VOTER_STAMP))
            seen_voter_stamps.add(block.receipt.voter_stamp)
            if block.vote in config.ballot_choices:
                countable.append(block)
            else:
                failures.append(Failure(loc, INVALID_CHOICE))

    return AuditReport(
        list_a=n_a,
        list_b=n_b,
        eligible=eligible,
        failures=sorted(failures),
        total_work=powcore.total_work(zeros, config.hash_algorithm_id),
        tally=tally(countable, config),
        zeros=zeros,
    )


def forgery_budget(zeros_list: Sequence[int], hashrate: int, seconds: int) -> ForgeryAssessment:
    """How many published blocks an adversary could expect to re-mine.

    Each replaced block must be re-mined to its original zero count, which
    costs ``2**z`` hashes on average. Taking the cheapest blocks first
    maximises the count for a fixed budget.
    """
    if hashrate < 0 or seconds < 0:
        raise ValueError("hashrate and seconds must be non-negative")
    budget = hashrate * seconds
    spent = count = 0
    for cost in sorted(1 << z for z in zeros_list):
        if spent + cost > budget:
            break
        spent += cost
        count += 1
    n = len(zeros_list)
    fraction = Fraction(count, n) if n else Fraction(0)
    return ForgeryAssessment(budget, count, fraction)
