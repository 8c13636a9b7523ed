"""Protocol data types and their canonical binary encodings.

All integers are big-endian, text is UTF-8, and every octet field has a
fixed width. The PoW preimage of a vote block is::

    "EDV1" | alg(1) | election_id(16) | vote_len(2) | vote | stamp(100) | voter_stamp(32)

and the nonce (8 octets) is appended by the miner. The mandate is never
part of it: that would let anyone pair the two published lists again.
"""

from __future__ import annotations

import secrets
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from . import powcore

MAGIC = b"EDV1"
ID_SIZE = 16
TOKEN_SIZE = 32
SECRET_SIZE = 32
FRESH_SIZE = 16
SIG_SIZE = 64
KEY_SIZE = 32
STAMP_SIZE = ID_SIZE + 4 + FRESH_SIZE + SIG_SIZE  # 100
MANDATE_SIZE = TOKEN_SIZE + ID_SIZE + SIG_SIZE
ACK_PREFIX = b"ACK"
MAX_VOTE_OCTETS = 0xFFFF
MAX_TIMESTAMP = 2**32 - 1

RandomBytes = Callable[[int], bytes]


class EncodingError(ValueError):
    code = "ENCODING"


class InvalidChoice(ValueError):
    code = "INVALID_CHOICE"


def _check_octets(name: str, value: bytes, size: int) -> None:
    if not isinstance(value, (bytes, bytearray)) or len(value) != size:
        raise ValueError(f"{name} must be {size} octets")


# -- keys and signatures ----------------------------------------------------


@dataclass(frozen=True, repr=False)
class Keypair:
    """Ed25519 keypair. ``private_key`` is the 32-octet seed."""

    public_key: bytes
    private_key: bytes

    def __repr__(self):
        return f"Keypair(public_key={self.public_key.hex()})"

    @classmethod
    def generate(cls, seed: bytes | None = None) -> "Keypair":
        if seed is None:
            sk = Ed25519PrivateKey.generate()
        else:
            _check_octets("seed", seed, KEY_SIZE)
            sk = Ed25519PrivateKey.from_private_bytes(bytes(seed))
        return cls(
            public_key=sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw),
            private_key=sk.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption()),
        )

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.private_key).sign(message)

    def to_json(self) -> dict:
        return {"public_key": self.public_key.hex(), "private_key": self.private_key.hex()}

    @classmethod
    def from_json(cls, obj: dict) -> "Keypair":
        kp = cls.generate(bytes.fromhex(obj["private_key"]))
        if "public_key" in obj and bytes.fromhex(obj["public_key"]) != kp.public_key:
            raise ValueError("public key does not match private key")
        return kp


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(bytes(public_key)).verify(bytes(signature), message)
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


# -- election configuration ---------------------------------------------------


@dataclass(frozen=True)
class ElectionConfig:
    election_id: bytes
    ballot_choices: tuple[str, ...]
    voting_window: tuple[int, int]
    work_floor: int = powcore.DEFAULT_FLOOR
    hash_algorithm_id: int = powcore.SHA256
    stamp_ttl: int = 3600
    chunk_interval: int | None = None

    def __post_init__(self):
        _check_octets("election_id", self.election_id, ID_SIZE)
        object.__setattr__(self, "ballot_choices", tuple(self.ballot_choices))
        object.__setattr__(self, "voting_window", tuple(self.voting_window))
        choices = self.ballot_choices
        if len(choices) < 2 or len(set(choices)) != len(choices) or not all(choices):
            raise ValueError("ballot_choices must be >= 2 unique non-empty strings")
        for c in choices:
            if len(c.encode("utf-8")) > MAX_VOTE_OCTETS:
                raise ValueError("ballot choice too long")
        start, end = self.voting_window
        if not 0 <= start < end <= MAX_TIMESTAMP:
            raise ValueError("voting_window must satisfy 0 <= start < end < 2**32")
        if not 1 <= self.work_floor <= 64:
            raise ValueError("work_floor must be within 1..64")
        powcore.hasher(self.hash_algorithm_id)
        if self.stamp_ttl <= 0:
            raise ValueError("stamp_ttl must be positive")
        if self.chunk_interval is not None and self.chunk_interval <= 0:
            raise ValueError("chunk_interval must be positive or None")

    @property
    def start(self) -> int:
        return self.voting_window[0]

    @property
    def end(self) -> int:
        return self.voting_window[1]

    def in_window(self, now: float) -> bool:
        return self.start <= now <= self.end

    def chunk_of(self, t: float) -> int:
        """Publication unit a timestamp falls into (always 0 when final-only)."""
        if self.chunk_interval is None:
            return 0
        return int((t - self.start) // self.chunk_interval)

    def chunk_end(self, index: int) -> int:
        if self.chunk_interval is None:
            return self.end
        return min(self.start + (index + 1) * self.chunk_interval, self.end)


# -- protocol values ----------------------------------------------------------


@dataclass(frozen=True)
class Mandate:
    """One-time voting authorization signed by the authority."""

    token: bytes
    election_id: bytes
    authority_signature: bytes

    def __post_init__(self):
        _check_octets("token", self.token, TOKEN_SIZE)
        _check_octets("election_id", self.election_id, ID_SIZE)
        _check_octets("authority_signature", self.authority_signature, SIG_SIZE)

    @staticmethod
    def signed_payload(token: bytes, election_id: bytes) -> bytes:
        return bytes(token) + bytes(election_id)

    def encode(self) -> bytes:
        return self.token + self.election_id + self.authority_signature

    @classmethod
    def decode(cls, data: bytes) -> "Mandate":
        if len(data) != MANDATE_SIZE:
            raise EncodingError(f"mandate must be {MANDATE_SIZE} octets")
        return cls(data[:32], data[32:48], data[48:])


@dataclass(frozen=True)
class PlatformStamp:
    """Platform-signed freshness value; ``epoch`` is the UTC second of issuance."""

    election_id: bytes
    epoch: int
    fresh: bytes
    platform_signature: bytes

    def __post_init__(self):
        _check_octets("election_id", self.election_id, ID_SIZE)
        _check_octets("fresh", self.fresh, FRESH_SIZE)
        _check_octets("platform_signature", self.platform_signature, SIG_SIZE)
        if not 0 <= self.epoch <= MAX_TIMESTAMP:
            raise ValueError("epoch must fit in 4 octets")

    @staticmethod
    def signed_payload(election_id: bytes, epoch: int, fresh: bytes) -> bytes:
        return bytes(election_id) + struct.pack(">I", epoch) + bytes(fresh)

    def encode(self) -> bytes:
        return (
            self.signed_payload(self.election_id, self.epoch, self.fresh)
            + self.platform_signature
        )

    @classmethod
    def decode(cls, data: bytes) -> "PlatformStamp":
        if len(data) != STAMP_SIZE:
            raise EncodingError(f"platform stamp must be {STAMP_SIZE} octets")
        (epoch,) = struct.unpack(">I", data[16:20])
        return cls(data[:16], epoch, data[20:36], data[36:])


@dataclass(frozen=True, repr=False)
class VoterSecret:
    secret: bytes

    def __post_init__(self):
        _check_octets("secret", self.secret, SECRET_SIZE)

    def __repr__(self):
        return "VoterSecret(<hidden>)"

    @classmethod
    def generate(cls, randbytes: RandomBytes = secrets.token_bytes) -> "VoterSecret":
        return cls(randbytes(SECRET_SIZE))


@dataclass(frozen=True)
class Receipt:
    platform_stamp: PlatformStamp
    voter_stamp: bytes

    def __post_init__(self):
        _check_octets("voter_stamp", self.voter_stamp, 32)


@dataclass(frozen=True)
class VoteBlock:
    vote: str
    receipt: Receipt
    nonce: int

    def __post_init__(self):
        if not 0 <= self.nonce <= powcore.MAX_NONCE:
            raise ValueError("nonce must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Submission:
    mandate: Mandate
    block: VoteBlock


@dataclass(frozen=True)
class Acknowledgment:
    block_digest: bytes
    platform_signature: bytes

    @staticmethod
    def signed_payload(block_digest: bytes) -> bytes:
        return ACK_PREFIX + bytes(block_digest)

    def verify(self, platform_public_key: bytes) -> bool:
        return verify_signature(
            platform_public_key, self.platform_signature, self.signed_payload(self.block_digest)
        )

    def encode(self) -> bytes:
        return self.block_digest + self.platform_signature

    @classmethod
    def decode(cls, data: bytes) -> "Acknowledgment":
        if len(data) <= SIG_SIZE:
            raise EncodingError("acknowledgment too short")
        return cls(data[:-SIG_SIZE], data[-SIG_SIZE:])


@dataclass(frozen=True)
class VotedMandate:
    """A list A record: the used mandate, stripped to what is published."""

    token: bytes
    authority_signature: bytes


@dataclass(frozen=True)
class PublishedLists:
    list_a: tuple[VotedMandate, ...]
    list_b: tuple[VoteBlock, ...]
    chunk_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "list_a", tuple(self.list_a))
        object.__setattr__(self, "list_b", tuple(self.list_b))


class ErrorCode(str, Enum):
    BAD_MANDATE_SIGNATURE = "BAD_MANDATE_SIGNATURE"
    DUPLICATE_MANDATE = "DUPLICATE_MANDATE"
    UNKNOWN_STAMP = "UNKNOWN_STAMP"
    STALE_STAMP = "STALE_STAMP"
    USED_STAMP = "USED_STAMP"
    DUPLICATE_VOTER_STAMP = "DUPLICATE_VOTER_STAMP"
    INSUFFICIENT_WORK = "INSUFFICIENT_WORK"
    INVALID_CHOICE = "INVALID_CHOICE"
    OUTSIDE_WINDOW = "OUTSIDE_WINDOW"
    HUMAN_CHALLENGE_FAILED = "HUMAN_CHALLENGE_FAILED"


class ValidationError(Exception):
    """A submission (or stamp request) refused by the platform."""

    def __init__(self, code: ErrorCode | str, detail: str = ""):
        self.code = ErrorCode(code)
        self.detail = detail
        super().__init__(f"{self.code.value}: {detail}" if detail else self.code.value)


# -- canonical block encoding -------------------------------------------------


def encode_block_preimage(config: ElectionConfig, vote: str, receipt: Receipt) -> bytes:
    if vote not in config.ballot_choices:
        raise InvalidChoice(f"{vote!r} is not a ballot choice")
    return build_preimage(config.hash_algorithm_id, config.election_id, vote, receipt)


def build_preimage(algorithm_id: int, election_id: bytes, vote: str, receipt: Receipt) -> bytes:
    vote_octets = vote.encode("utf-8", "surrogatepass")
    if len(vote_octets) > MAX_VOTE_OCTETS:
        raise EncodingError("vote longer than 65535 octets")
    return b"".join(
        (
            MAGIC,
            bytes((algorithm_id,)),
            election_id,
            struct.pack(">H", len(vote_octets)),
            vote_octets,
            receipt.platform_stamp.encode(),
            receipt.voter_stamp,
        )
    )


def block_preimage(config: ElectionConfig, block: VoteBlock) -> bytes:
    """Preimage prefix of an existing block, without the ballot-choice check.

    Used on the verification side, where a tampered vote must still hash.
    """
    return build_preimage(config.hash_algorithm_id, config.election_id, block.vote, block.receipt)


def encode_block(config: ElectionConfig, block: VoteBlock) -> bytes:
    return block_preimage(config, block) + powcore.encode_nonce(block.nonce)


def decode_block(data: bytes) -> tuple[int, bytes, VoteBlock]:
    """Parse a full block encoding into ``(algorithm_id, election_id, block)``."""
    head = len(MAGIC) + 1 + ID_SIZE + 2
    if len(data) < head or data[:4] != MAGIC:
        raise EncodingError("not an EDV1 block")
    algorithm_id = data[4]
    election_id = data[5:21]
    (vote_len,) = struct.unpack(">H", data[21:23])
    if len(data) != head + vote_len + STAMP_SIZE + 32 + powcore.NONCE_SIZE:
        raise EncodingError("block length does not match its vote length field")
    pos = head + vote_len
    try:
        vote = data[head:pos].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError("vote is not valid UTF-8") from exc
    stamp = PlatformStamp.decode(data[pos : pos + STAMP_SIZE])
    pos += STAMP_SIZE
    voter_stamp = data[pos : pos + 32]
    nonce = int.from_bytes(data[pos + 32 :], "big")
    return algorithm_id, election_id, VoteBlock(vote, Receipt(stamp, voter_stamp), nonce)


def block_digest(config: ElectionConfig, block: VoteBlock) -> bytes:
    return powcore.hash_block(encode_block(config, block), config.hash_algorithm_id)


def block_zeros(config: ElectionConfig, block: VoteBlock) -> int:
    return powcore.leading_zero_bits(block_digest(config, block))


# -- receipts, mandates, stamps -------------------------------------------------


def make_voter_stamp(secret: VoterSecret, algorithm_id: int = powcore.SHA256) -> bytes:
    return powcore.hash_block(secret.secret, algorithm_id)


def check_ownership(
    secret: VoterSecret, block: VoteBlock, algorithm_id: int = powcore.SHA256
) -> bool:
    return secrets.compare_digest(
        make_voter_stamp(secret, algorithm_id), block.receipt.voter_stamp
    )


def verify_mandate(m: Mandate, authority_public_key: bytes) -> bool:
    return verify_signature(
        authority_public_key,
        m.authority_signature,
        Mandate.signed_payload(m.token, m.election_id),
    )


def verify_voted_mandate(
    record: VotedMandate, election_id: bytes, authority_public_key: bytes
) -> bool:
    return verify_signature(
        authority_public_key,
        record.authority_signature,
        Mandate.signed_payload(record.token, election_id),
    )


def verify_platform_stamp(
    s: PlatformStamp, platform_public_key: bytes, config: ElectionConfig, now: float
) -> bool:
    """Signature, election binding, and issuance time inside ``[start, now]`` within TTL."""
    if s.election_id != config.election_id:
        return False
    if not verify_signature(
        platform_public_key,
        s.platform_signature,
        PlatformStamp.signed_payload(s.election_id, s.epoch, s.fresh),
    ):
        return False
    if not config.start <= s.epoch <= now:
        return False
    return now - s.epoch <= config.stamp_ttl


def stamp_in_window(s: PlatformStamp, platform_public_key: bytes, config: ElectionConfig) -> bool:
    """Offline stamp check used by auditors: no wall clock involved."""
    return (
        s.election_id == config.election_id
        and config.start <= s.epoch <= config.end
        and verify_signature(
            platform_public_key,
            s.platform_signature,
            PlatformStamp.signed_payload(s.election_id, s.epoch, s.fresh),
        )
    )

