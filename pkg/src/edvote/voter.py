"""Voter client: cast a mined ballot and later find it in the published lists."""

from __future__ import annotations

import secrets
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol

from . import powcore, wire
from .model import (
    Acknowledgment,
    ElectionConfig,
    ErrorCode,
    Mandate,
    PlatformStamp,
    PublishedLists,
    RandomBytes,
    Receipt,
    Submission,
    ValidationError,
    VoterSecret,
    VoteBlock,
    build_preimage,
    check_ownership,
    encode_block_preimage,
    make_voter_stamp,
)

DEFAULT_BUDGET = powcore.MiningBudget(wall_time=30_000)


class VoterError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class PlatformEndpoint(Protocol):
    def request_stamp(self) -> PlatformStamp: ...

    def submit(self, submission: Submission) -> Acknowledgment: ...

    def public_key(self) -> bytes: ...


class LocalEndpoint:
    """Talks to an in-process :class:`~edvote.platform.Platform`."""

    def __init__(self, platform, clock: Callable[[], float] = time.time):
        self.platform = platform
        self.clock = clock

    def request_stamp(self) -> PlatformStamp:
        return self.platform.issue_stamp(self.clock())

    def submit(self, submission: Submission) -> Acknowledgment:
        return self.platform.submit(submission, self.clock())

    def public_key(self) -> bytes:
        return self.platform.public_key


class HttpEndpoint:
    """Talks to the platform service over HTTP."""

    def __init__(self, base_url: str, client=None, timeout: float = 30.0):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.client = client if client is not None else httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict | None = None) -> dict:
        resp = self.client.post(f"{self.base_url}{path}", json=payload)
        body = resp.json()
        if resp.status_code >= 400:
            code = body.get("code") if isinstance(body, dict) else None
            detail = body.get("detail", "") if isinstance(body, dict) else ""
            if code in ErrorCode.__members__:
                raise ValidationError(code, detail)
            raise VoterError(code or f"HTTP_{resp.status_code}", str(detail))
        return body

    def request_stamp(self) -> PlatformStamp:
        return wire.stamp_from_json(self._post("/stamp"))

    def submit(self, submission: Submission) -> Acknowledgment:
        return wire.ack_from_json(self._post("/submit", wire.submission_to_json(submission)))

    def public_key(self) -> bytes:
        resp = self.client.get(f"{self.base_url}/pubkey")
        resp.raise_for_status()
        return bytes.fromhex(resp.json()["public_key"])

    def published(self) -> list[PublishedLists]:
        resp = self.client.get(f"{self.base_url}/published")
        resp.raise_for_status()
        return [wire.published_from_json(u) for u in resp.json()]


@dataclass(frozen=True, repr=False)
class ReceiptFile:
    """Everything a voter keeps after casting. Contains the secret: keep private."""

    election_id: bytes
    vote: str
    voter_secret: VoterSecret
    platform_stamp: PlatformStamp
    nonce: int
    achieved_zeros: int
    acknowledgment: Acknowledgment
    hash_algorithm_id: int = powcore.SHA256

    def __repr__(self):
        return f"ReceiptFile(vote={self.vote!r}, zeros={self.achieved_zeros})"

    def block(self) -> VoteBlock:
        stamp = make_voter_stamp(self.voter_secret, self.hash_algorithm_id)
        return VoteBlock(self.vote, Receipt(self.platform_stamp, stamp), self.nonce)

    def to_json(self) -> dict:
        return {
            "election_id": self.election_id.hex(),
            "vote": self.vote,
            "voter_secret": self.voter_secret.secret.hex(),
            "platform_stamp": wire.stamp_to_json(self.platform_stamp),
            "nonce": powcore.encode_nonce(self.nonce).hex(),
            "achieved_zeros": self.achieved_zeros,
            "acknowledgment": wire.ack_to_json(self.acknowledgment),
            "hash_algorithm_id": self.hash_algorithm_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReceiptFile":
        try:
            return cls(
                election_id=bytes.fromhex(obj["election_id"]),
                vote=obj["vote"],
                voter_secret=VoterSecret(bytes.fromhex(obj["voter_secret"])),
                platform_stamp=wire.stamp_from_json(obj["platform_stamp"]),
                nonce=int.from_bytes(bytes.fromhex(obj["nonce"]), "big"),
                achieved_zeros=obj["achieved_zeros"],
                acknowledgment=wire.ack_from_json(obj["acknowledgment"]),
                hash_algorithm_id=obj.get("hash_algorithm_id", powcore.SHA256),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise wire.MalformedInput(f"bad receipt: {exc}") from exc

    def save(self, path) -> None:
        wire.write_json(path, self.to_json(), private=True)

    @classmethod
    def load(cls, path) -> "ReceiptFile":
        return cls.from_json(wire.read_json(path))


@dataclass(frozen=True, repr=False)
class PreparedBallot:
    """A mined submission plus the private values needed to build its receipt."""

    config: ElectionConfig
    submission: Submission
    secret: VoterSecret
    digest: bytes
    achieved_zeros: int
    attempts: int

    def receipt(self, ack: Acknowledgment) -> ReceiptFile:
        block = self.submission.block
        return ReceiptFile(
            election_id=self.config.election_id,
            vote=block.vote,
            voter_secret=self.secret,
            platform_stamp=block.receipt.platform_stamp,
            nonce=block.nonce,
            achieved_zeros=self.achieved_zeros,
            acknowledgment=ack,
            hash_algorithm_id=self.config.hash_algorithm_id,
        )


def prepare_ballot(
    config: ElectionConfig,
    mandate: Mandate,
    vote: str,
    stamp: PlatformStamp,
    budget: powcore.MiningBudget = DEFAULT_BUDGET,
    *,
    randbytes: RandomBytes = secrets.token_bytes,
    hard_cap: int = powcore.DEFAULT_HARD_CAP,
) -> PreparedBallot:
    if vote not in config.ballot_choices:
        raise ValidationError(ErrorCode.INVALID_CHOICE, repr(vote))
    secret = VoterSecret.generate(randbytes)
    receipt = Receipt(stamp, make_voter_stamp(secret, config.hash_algorithm_id))
    prefix = encode_block_preimage(config, vote, receipt)
    result = powcore.mine(
        prefix,
        budget,
        config.work_floor,
        algorithm_id=config.hash_algorithm_id,
        hard_cap=hard_cap,
    )
    digest = powcore.hash_block(
        prefix + powcore.encode_nonce(result.best_nonce), config.hash_algorithm_id
    )
    block = VoteBlock(vote, receipt, result.best_nonce)
    return PreparedBallot(
        config, Submission(mandate, block), secret, digest, result.best_zeros, result.attempts
    )


def check_ack(prepared: PreparedBallot, ack: Acknowledgment, platform_public_key: bytes) -> None:
    if ack.block_digest != prepared.digest or not ack.verify(platform_public_key):
        raise VoterError("ACK_INVALID", "platform acknowledgment does not verify")


def cast(
    config: ElectionConfig,
    mandate: Mandate,
    vote: str,
    budget: powcore.MiningBudget = DEFAULT_BUDGET,
    platform: PlatformEndpoint | None = None,
    *,
    receipt_out: str | Path | None = None,
    platform_public_key: bytes | None = None,
    randbytes: RandomBytes = secrets.token_bytes,
    hard_cap: int = powcore.DEFAULT_HARD_CAP,
) -> ReceiptFile:
    """Run the whole client flow: stamp, secret, mine, submit, check the ack.

    Platform rejections propagate as :class:`ValidationError`. A bad
    acknowledgment raises ``VoterError("ACK_INVALID")``. No receipt is
    written unless the acknowledgment checks out.
    """
    if platform is None:
        raise ValueError("a platform endpoint is required")
    if vote not in config.ballot_choices:
        raise ValidationError(ErrorCode.INVALID_CHOICE, repr(vote))
    if platform_public_key is None:
        platform_public_key = platform.public_key()

    stamp = platform.request_stamp()
    prepared = prepare_ballot(
        config, mandate, vote, stamp, budget, randbytes=randbytes, hard_cap=hard_cap
    )
    ack = platform.submit(prepared.submission)
    check_ack(prepared, ack, platform_public_key)
    rf = prepared.receipt(ack)
    if receipt_out is not None:
        rf.save(receipt_out)
    return rf


def _block_prefix(r: ReceiptFile, block: VoteBlock) -> bytes:
    return build_preimage(r.hash_algorithm_id, r.election_id, block.vote, block.receipt)


def find_own_block(r: ReceiptFile, published: Iterable[PublishedLists]) -> VoteBlock | None:
    for unit in published:
        for b in unit.list_b:
            if check_ownership(r.voter_secret, b, r.hash_algorithm_id):
                return b
    return None


def self_verify(r: ReceiptFile, published: Iterable[PublishedLists]) -> bool:
    """True iff the voter's own record is published intact with its work."""
    for unit in published:
        for b in unit.list_b:
            if not check_ownership(r.voter_secret, b, r.hash_algorithm_id):
                continue
            if (
                b.vote == r.vote
                and b.nonce == r.nonce
                and b.receipt.platform_stamp == r.platform_stamp
                and powcore.verify_work(
                    _block_prefix(r, b), b.nonce, r.achieved_zeros, r.hash_algorithm_id
                )
            ):
                return True
    return False
