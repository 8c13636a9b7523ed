"""The election platform: stamps, submission validation, severed publication."""

from __future__ import annotations

import logging
import random
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import wire
from .model import (
    Acknowledgment,
    ElectionConfig,
    ErrorCode,
    FRESH_SIZE,
    Keypair,
    PlatformStamp,
    PublishedLists,
    RandomBytes,
    Submission,
    ValidationError,
    VotedMandate,
    block_digest,
    verify_mandate,
    verify_platform_stamp,
)
from .powcore import leading_zero_bits

log = logging.getLogger(__name__)


class PublicationError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


def always_human(submission: Submission) -> bool:
    """Placeholder human-verification hook; swap in a CAPTCHA check here."""
    return True


@dataclass
class _StampRecord:
    stamp: PlatformStamp
    issued_at: float
    used: bool = False


@dataclass
class _Accepted:
    submission: Submission
    received_at: float
    chunk: int
    published: bool = False


class Platform:
    """In-memory platform state for one election.

    ``submit`` does all check-and-mark steps under one lock, so concurrent
    callers reusing a mandate token, stamp or voter stamp cannot both win.
    Accepted submissions are private; only the shuffled, unpaired lists
    produced by ``publish_chunk`` / ``publish_final`` leave this object.
    """

    def __init__(
        self,
        config: ElectionConfig,
        keypair: Keypair,
        authority_public_key: bytes,
        *,
        data_dir: str | Path | None = None,
        randbytes: RandomBytes = secrets.token_bytes,
        shuffler: random.Random | None = None,
        human_challenge: Callable[[Submission], bool] = always_human,
    ):
        self.config = config
        self.keypair = keypair
        self.authority_public_key = authority_public_key
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.human_challenge = human_challenge
        self._randbytes = randbytes
        self._shuffler = shuffler if shuffler is not None else random.SystemRandom()
        self._lock = threading.Lock()
        self._pub_lock = threading.Lock()
        self.issued_stamps: dict[bytes, _StampRecord] = {}
        self.used_tokens: set[bytes] = set()
        self.seen_voter_stamps: set[bytes] = set()
        self.accepted: list[_Accepted] = []
        self.published_chunks: list[PublishedLists] = []
        self._published_epochs: set[int] = set()
        self._final_published = False
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    # -- stamps ------------------------------------------------------------

    def issue_stamp(self, now: float) -> PlatformStamp:
        cfg = self.config
        if not cfg.in_window(now) or self._final_published:
            raise ValidationError(ErrorCode.OUTSIDE_WINDOW, f"t={now} outside voting window")
        epoch = int(now)
        with self._lock:
            fresh = self._randbytes(FRESH_SIZE)
            while fresh in self.issued_stamps:
                fresh = self._randbytes(FRESH_SIZE)
            sig = self.keypair.sign(PlatformStamp.signed_payload(cfg.election_id, epoch, fresh))
            stamp = PlatformStamp(cfg.election_id, epoch, fresh, sig)
            self.issued_stamps[fresh] = _StampRecord(stamp, now)
        return stamp

    # -- submissions -------------------------------------------------------

    def submit(self, s: Submission, now: float) -> Acknowledgment:
        """Validate and store a submission, or raise :class:`ValidationError`.

        Checks run in a fixed order (window, mandate signature, token reuse,
        stamp known/fresh/unused, voter stamp reuse, ballot choice, work) and
        the first failing one decides the code.
        """
        if not self.human_challenge(s):
            raise ValidationError(ErrorCode.HUMAN_CHALLENGE_FAILED)
        cfg = self.config
        block = s.block
        stamp = block.receipt.platform_stamp
        with self._lock:
            if not cfg.in_window(now) or self._final_published:
                raise ValidationError(ErrorCode.OUTSIDE_WINDOW, f"t={now}")
            if s.mandate.election_id != cfg.election_id or not verify_mandate(
                s.mandate, self.authority_public_key
            ):
                raise ValidationError(ErrorCode.BAD_MANDATE_SIGNATURE)
            if s.mandate.token in self.used_tokens:
                raise ValidationError(ErrorCode.DUPLICATE_MANDATE, s.mandate.token.hex()[:16])
            rec = self.issued_stamps.get(stamp.fresh)
            if rec is None or rec.stamp != stamp:
                raise ValidationError(ErrorCode.UNKNOWN_STAMP)
            if now - rec.issued_at > cfg.stamp_ttl or not verify_platform_stamp(
                stamp, self.public_key, cfg, now
            ):
                raise ValidationError(ErrorCode.STALE_STAMP, f"issued at {rec.issued_at}")
            if rec.used:
                raise ValidationError(ErrorCode.USED_STAMP)
            if block.receipt.voter_stamp in self.seen_voter_stamps:
                raise ValidationError(ErrorCode.DUPLICATE_VOTER_STAMP)
            if block.vote not in cfg.ballot_choices:
                raise ValidationError(ErrorCode.INVALID_CHOICE, repr(block.vote))
            digest = block_digest(cfg, block)
            zeros = leading_zero_bits(digest)
            if zeros < cfg.work_floor:
                raise ValidationError(
                    ErrorCode.INSUFFICIENT_WORK, f"{zeros} < floor {cfg.work_floor}"
                )

            self.used_tokens.add(s.mandate.token)
            rec.used = True
            self.seen_voter_stamps.add(block.receipt.voter_stamp)
            self.accepted.append(_Accepted(s, now, cfg.chunk_of(now)))
            if self.data_dir is not None:
                wire.write_jsonl(
                    self.data_dir / "accepted.jsonl",
                    [{"received_at": now, **wire.submission_to_json(s)}],
                    append=True,
                )
        sig = self.keypair.sign(Acknowledgment.signed_payload(digest))
        return Acknowledgment(digest, sig)

    # -- publication ---------------------------------------------------------

    def _emit(self, entries: list[_Accepted], chunk_index: int | None) -> PublishedLists:
        list_a = [
            VotedMandate(e.submission.mandate.token, e.submission.mandate.authority_signature)
            for e in entries
        ]
        list_b = [e.submission.block for e in entries]
        # independent permutations: arrival order would re-link the lists
        self._shuffler.shuffle(list_a)
        self._shuffler.shuffle(list_b)
        for e in entries:
            e.published = True
        unit = PublishedLists(list_a, list_b, chunk_index)
        self.published_chunks.append(unit)
        if self.data_dir is not None:
            wire.write_published(self.data_dir / "published", unit)
        log.info("published unit %s with %d records", chunk_index, len(entries))
        return unit

    def publish_chunk(self, epoch: int, now: float) -> PublishedLists:
        cfg = self.config
        if cfg.chunk_interval is None:
            raise PublicationError("NOT_CHUNKED", "election publishes final lists only")
        with self._lock:
            if epoch in self._published_epochs or self._final_published:
                raise PublicationError("ALREADY_PUBLISHED", f"chunk {epoch}")
            if epoch < 0 or now < cfg.chunk_end(epoch) or epoch > cfg.chunk_of(cfg.end):
                raise PublicationError("EPOCH_OPEN", f"chunk {epoch} has not closed")
            entries = [e for e in self.accepted if e.chunk == epoch and not e.published]
            self._published_epochs.add(epoch)
            return self._emit(entries, epoch)

    def publish_final(self, now: float) -> PublishedLists:
        with self._lock:
            if self._final_published:
                raise PublicationError("ALREADY_PUBLISHED", "final lists")
            if now <= self.config.end:
                raise PublicationError("ELECTION_OPEN", "voting window has not ended")
            self._final_published = True
            return self._emit([e for e in self.accepted if not e.published], None)

    def publish_due(self, now: float) -> list[PublishedLists]:
        """Publish every unit whose time has come; returns the newly published ones."""
        cfg = self.config
        out = []
        with self._pub_lock:
            if cfg.chunk_interval is not None and not self._final_published:
                for epoch in range(cfg.chunk_of(min(now, cfg.end)) + 1):
                    if epoch not in self._published_epochs and now >= cfg.chunk_end(epoch):
                        out.append(self.publish_chunk(epoch, now))
            if now > cfg.end and not self._final_published:
                out.append(self.publish_final(now))
        return out

    def published(self) -> list[PublishedLists]:
        with self._lock:
            return list(self.published_chunks)
