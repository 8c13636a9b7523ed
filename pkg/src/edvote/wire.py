"""JSON forms of protocol values and the JSON-lines publication layout.

Octet fields are lowercase hex; the nonce travels as its 8-octet
big-endian encoding. List records carry only the published field names,
never anything that could pair a list A entry with a list B entry.
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path
from typing import Iterable, Sequence

from . import powcore
from .model import (
    Acknowledgment,
    ElectionConfig,
    Keypair,
    Mandate,
    PlatformStamp,
    PublishedLists,
    Receipt,
    Submission,
    VotedMandate,
    VoteBlock,
)

LIST_A_FIELDS = frozenset({"token", "authority_signature"})
LIST_B_FIELDS = frozenset(
    {"vote", "election_id", "epoch", "fresh", "platform_signature", "voter_stamp", "nonce"}
)

_CHUNK_RE = re.compile(r"^chunk_(\d+)_a\.jsonl$")


class MalformedInput(ValueError):
    code = "MALFORMED_INPUT"


def _hex(obj: dict, key: str, size: int | None = None) -> bytes:
    try:
        value = obj[key]
    except KeyError:
        raise MalformedInput(f"missing field {key!r}") from None
    if not isinstance(value, str) or value != value.lower():
        raise MalformedInput(f"field {key!r} must be lowercase hex")
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise MalformedInput(f"field {key!r} is not hex") from None
    if size is not None and len(raw) != size:
        raise MalformedInput(f"field {key!r} must be {size} octets")
    return raw


def _int(obj: dict, key: str) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedInput(f"field {key!r} must be an integer")
    return value


def _guard(fn):
    def wrapped(obj):
        if not isinstance(obj, dict):
            raise MalformedInput(f"expected a JSON object, got {type(obj).__name__}")
        try:
            return fn(obj)
        except MalformedInput:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise MalformedInput(str(exc)) from exc

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


# -- individual values ----------------------------------------------------------


def mandate_to_json(m: Mandate) -> dict:
    return {
        "token": m.token.hex(),
        "election_id": m.election_id.hex(),
        "authority_signature": m.authority_signature.hex(),
    }


@_guard
def mandate_from_json(obj: dict) -> Mandate:
    return Mandate(
        _hex(obj, "token", 32), _hex(obj, "election_id", 16), _hex(obj, "authority_signature", 64)
    )


def stamp_to_json(s: PlatformStamp) -> dict:
    return {
        "election_id": s.election_id.hex(),
        "epoch": s.epoch,
        "fresh": s.fresh.hex(),
        "platform_signature": s.platform_signature.hex(),
    }


@_guard
def stamp_from_json(obj: dict) -> PlatformStamp:
    return PlatformStamp(
        _hex(obj, "election_id", 16),
        _int(obj, "epoch"),
        _hex(obj, "fresh", 16),
        _hex(obj, "platform_signature", 64),
    )


def block_to_json(b: VoteBlock) -> dict:
    out = {"vote": b.vote}
    out.update(stamp_to_json(b.receipt.platform_stamp))
    out["voter_stamp"] = b.receipt.voter_stamp.hex()
    out["nonce"] = powcore.encode_nonce(b.nonce).hex()
    return out


@_guard
def block_from_json(obj: dict) -> VoteBlock:
    vote = obj.get("vote")
    if not isinstance(vote, str):
        raise MalformedInput("field 'vote' must be a string")
    receipt = Receipt(stamp_from_json(obj), _hex(obj, "voter_stamp", 32))
    nonce = int.from_bytes(_hex(obj, "nonce", powcore.NONCE_SIZE), "big")
    return VoteBlock(vote, receipt, nonce)


def voted_to_json(v: VotedMandate) -> dict:
    return {"token": v.token.hex(), "authority_signature": v.authority_signature.hex()}


@_guard
def voted_from_json(obj: dict) -> VotedMandate:
    return VotedMandate(_hex(obj, "token", 32), _hex(obj, "authority_signature", 64))


def submission_to_json(s: Submission) -> dict:
    return {"mandate": mandate_to_json(s.mandate), "block": block_to_json(s.block)}


@_guard
def submission_from_json(obj: dict) -> Submission:
    return Submission(mandate_from_json(obj.get("mandate")), block_from_json(obj.get("block")))


def ack_to_json(a: Acknowledgment) -> dict:
    return {
        "block_digest": a.block_digest.hex(),
        "platform_signature": a.platform_signature.hex(),
    }


@_guard
def ack_from_json(obj: dict) -> Acknowledgment:
    return Acknowledgment(_hex(obj, "block_digest"), _hex(obj, "platform_signature", 64))


def published_to_json(p: PublishedLists) -> dict:
    return {
        "chunk_index": p.chunk_index,
        "list_a": [voted_to_json(v) for v in p.list_a],
        "list_b": [block_to_json(b) for b in p.list_b],
    }


@_guard
def published_from_json(obj: dict) -> PublishedLists:
    chunk = obj.get("chunk_index")
    if chunk is not None and not isinstance(chunk, int):
        raise MalformedInput("chunk_index must be an integer or null")
    return PublishedLists(
        [voted_from_json(r) for r in obj.get("list_a", [])],
        [block_from_json(r) for r in obj.get("list_b", [])],
        chunk,
    )


def config_to_json(c: ElectionConfig) -> dict:
    return {
        "election_id": c.election_id.hex(),
        "ballot_choices": list(c.ballot_choices),
        "hash_algorithm_id": c.hash_algorithm_id,
        "work_floor": c.work_floor,
        "voting_window": list(c.voting_window),
        "stamp_ttl": c.stamp_ttl,
        "chunk_interval": c.chunk_interval,
    }


@_guard
def config_from_json(obj: dict) -> ElectionConfig:
    return ElectionConfig(
        election_id=_hex(obj, "election_id", 16),
        ballot_choices=tuple(obj["ballot_choices"]),
        voting_window=tuple(obj["voting_window"]),
        work_floor=obj.get("work_floor", powcore.DEFAULT_FLOOR),
        hash_algorithm_id=obj.get("hash_algorithm_id", powcore.SHA256),
        stamp_ttl=obj.get("stamp_ttl", 3600),
        chunk_interval=obj.get("chunk_interval"),
    )


# -- files -----------------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_json(path, obj, *, private: bool = False) -> None:
    path = Path(path)
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if private:
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(path, 0o600)
    else:
        path.write_text(text, encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def write_jsonl(path, records: Iterable[dict], *, append: bool = False) -> None:
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"{path}:{lineno}: {exc}") from exc
    return out


def unit_filenames(chunk_index: int | None) -> tuple[str, str]:
    if chunk_index is None:
        return "list_a.jsonl", "list_b.jsonl"
    return f"chunk_{chunk_index}_a.jsonl", f"chunk_{chunk_index}_b.jsonl"


def write_published(directory, unit: PublishedLists) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name_a, name_b = unit_filenames(unit.chunk_index)
    write_jsonl(directory / name_a, (voted_to_json(v) for v in unit.list_a))
    write_jsonl(directory / name_b, (block_to_json(b) for b in unit.list_b))
    return directory / name_a, directory / name_b


def _read_unit(directory: Path, chunk_index: int | None) -> PublishedLists:
    name_a, name_b = unit_filenames(chunk_index)
    path_b = directory / name_b
    if not path_b.exists():
        raise MalformedInput(f"{path_b} is missing")
    list_a = [voted_from_json(r) for r in read_jsonl(directory / name_a)]
    list_b = [block_from_json(r) for r in read_jsonl(path_b)]
    return PublishedLists(list_a, list_b, chunk_index)


def read_published(directory) -> list[PublishedLists]:
    """Load every published unit in a directory: chunks by index, then the final lists."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MalformedInput(f"{directory} is not a directory")
    chunks = sorted(
        int(m.group(1)) for m in (_CHUNK_RE.match(p.name) for p in directory.iterdir()) if m
    )
    units = [_read_unit(directory, c) for c in chunks]
    if (directory / "list_a.jsonl").exists():
        units.append(_read_unit(directory, None))
    return units


def write_all_published(directory, units: Sequence[PublishedLists]) -> None:
    for unit in units:
        write_published(directory, unit)


def load_keypair(path) -> Keypair:
    try:
        return Keypair.from_json(read_json(path))
    except (KeyError, ValueError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc
