"""Hashing, leading-zero difficulty, nonce mining and work accounting.

Work is always counted in hash evaluations and kept as exact Python ints:
a block whose digest starts with ``z`` zero bits is worth ``2**z`` hashes.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Callable, Iterable

SHA256 = 0x01
BLAKE2B_256 = 0x02

NONCE_SIZE = 8
MAX_NONCE = 2**64 - 1
DEFAULT_HARD_CAP = 2**32
DEFAULT_FLOOR = 12

_ALGORITHMS: dict[int, Callable[[], "hashlib._Hash"]] = {
    SHA256: hashlib.sha256,
    BLAKE2B_256: lambda: hashlib.blake2b(digest_size=32),
}


class BudgetTooSmall(Exception):
    """The work floor was not reached before the hard attempt cap."""

    code = "BUDGET_TOO_SMALL"


def hasher(algorithm_id: int = SHA256):
    try:
        return _ALGORITHMS[algorithm_id]()
    except KeyError:
        raise ValueError(f"unknown hash algorithm id 0x{algorithm_id:02x}") from None


def digest_bits(algorithm_id: int = SHA256) -> int:
    return hasher(algorithm_id).digest_size * 8


def hash_block(preimage: bytes, algorithm_id: int = SHA256) -> bytes:
    if not preimage:
        raise ValueError("preimage must be non-empty")
    h = hasher(algorithm_id)
    h.update(preimage)
    return h.digest()


def leading_zero_bits(digest: bytes) -> int:
    width = 8 * len(digest)
    return width - int.from_bytes(digest, "big").bit_length()


def encode_nonce(nonce: int) -> bytes:
    return nonce.to_bytes(NONCE_SIZE, "big")


@dataclass(frozen=True)
class MiningBudget:
    """Either a number of hash evaluations or a wall-clock allowance in ms."""

    max_attempts: int | None = None
    wall_time: int | None = None

    def __post_init__(self):
        if (self.max_attempts is None) == (self.wall_time is None):
            raise ValueError("exactly one of max_attempts / wall_time must be set")
        if self.max_attempts is not None and self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.wall_time is not None and self.wall_time <= 0:
            raise ValueError("wall_time must be > 0")

    @classmethod
    def attempts(cls, n: int) -> "MiningBudget":
        return cls(max_attempts=n)

    @classmethod
    def millis(cls, ms: int) -> "MiningBudget":
        return cls(wall_time=ms)

    def to_json(self) -> dict:
        if self.max_attempts is not None:
            return {"max_attempts": self.max_attempts}
        return {"wall_time": self.wall_time}

    @classmethod
    def from_json(cls, obj: dict) -> "MiningBudget":
        return cls(max_attempts=obj.get("max_attempts"), wall_time=obj.get("wall_time"))


@dataclass(frozen=True)
class MiningResult:
    best_nonce: int
    best_zeros: int
    attempts: int


def mine(
    preimage_prefix: bytes,
    budget: MiningBudget,
    floor: int = 0,
    *,
    algorithm_id: int = SHA256,
    hard_cap: int = DEFAULT_HARD_CAP,
    clock: Callable[[], float] = time.monotonic,
) -> MiningResult:
    """Search nonces 0, 1, 2, ... for the digest with the most leading zeros.

    Mining stops once the budget is spent *and* ``floor`` has been met;
    if the budget runs out first the search carries on until the floor is
    reached or ``hard_cap`` attempts have been made, in which case
    :class:`BudgetTooSmall` is raised. Ties keep the earliest nonce.
    """
    width = digest_bits(algorithm_id)
    if not 0 <= floor <= width:
        raise ValueError(f"floor must be within 0..{width}")
    hard_cap = min(hard_cap, MAX_NONCE + 1)

    base = hasher(algorithm_id)
    base.update(preimage_prefix)
    deadline = None
    if budget.wall_time is not None:
        deadline = clock() + budget.wall_time / 1000.0
    limit = budget.max_attempts

    best_nonce, best_zeros = 0, -1
    nonce = 0
    while True:
        h = base.copy()
        h.update(nonce.to_bytes(NONCE_SIZE, "big"))
        zeros = width - int.from_bytes(h.digest(), "big").bit_length()
        if zeros > best_zeros:
            best_nonce, best_zeros = nonce, zeros
            if zeros == width:
                nonce += 1
                break
        nonce += 1
        if limit is not None:
            spent = nonce >= limit
        else:
            # checking the clock every hash is measurably slower
            spent = (nonce & 0x3FF) == 0 and clock() >= deadline
        if spent and best_zeros >= floor:
            break
        if nonce >= hard_cap:
            if best_zeros >= floor:
                break
            raise BudgetTooSmall(
                f"no digest with {floor} leading zero bits in {hard_cap} attempts"
            )
    return MiningResult(best_nonce=best_nonce, best_zeros=best_zeros, attempts=nonce)


def verify_work(
    preimage_prefix: bytes, nonce: int, claimed_floor: int, algorithm_id: int = SHA256
) -> bool:
    digest = hash_block(preimage_prefix + encode_nonce(nonce), algorithm_id)
    return leading_zero_bits(digest) >= claimed_floor


def block_zeros(preimage_prefix: bytes, nonce: int, algorithm_id: int = SHA256) -> int:
    return leading_zero_bits(hash_block(preimage_prefix + encode_nonce(nonce), algorithm_id))


def work_estimate(zeros: int, algorithm_id: int = SHA256) -> int:
    """Expected hash evaluations behind a digest with ``zeros`` leading zero bits."""
    width = digest_bits(algorithm_id)
    if not isinstance(zeros, int) or not 0 <= zeros <= width:
        raise ValueError(f"zeros must be an integer in 0..{width}, got {zeros!r}")
    return 1 << zeros


def total_work(zeros_list: Iterable[int], algorithm_id: int = SHA256) -> int:
    return sum((work_estimate(z, algorithm_id) for z in zeros_list), 0)
