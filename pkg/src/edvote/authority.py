"""The electoral authority: signing keys, one-time mandates, issuance log."""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .model import ElectionConfig, Keypair, Mandate, RandomBytes, TOKEN_SIZE


class AlreadyIssued(Exception):
    code = "ALREADY_ISSUED"


def keygen(seed: bytes | None = None) -> Keypair:
    """Fresh Ed25519 keypair; a seed makes it deterministic (tests only)."""
    return Keypair.generate(seed)


@dataclass(frozen=True)
class IssuanceEntry:
    election_id: bytes
    token: bytes
    issued_at: float
    citizen_ref: str

    def to_json(self) -> dict:
        return {
            "election_id": self.election_id.hex(),
            "token": self.token.hex(),
            "issued_at": self.issued_at,
            "citizen_ref": self.citizen_ref,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IssuanceEntry":
        return cls(
            bytes.fromhex(obj["election_id"]),
            bytes.fromhex(obj["token"]),
            obj["issued_at"],
            obj["citizen_ref"],
        )


class Authority:
    """Issues one mandate per citizen per election.

    The issuance log (with ``citizen_ref``) is authority-private; nothing
    here exports it except the log file itself. If ``log_path`` is given the
    log is append-only JSON lines and is reloaded on construction.
    """

    def __init__(
        self,
        keypair: Keypair,
        log_path: str | Path | None = None,
        *,
        randbytes: RandomBytes = secrets.token_bytes,
        clock: Callable[[], float] = time.time,
    ):
        self.keypair = keypair
        self.log_path = Path(log_path) if log_path is not None else None
        self._randbytes = randbytes
        self._clock = clock
        self._lock = threading.Lock()
        self._entries: list[IssuanceEntry] = []
        self._by_citizen: set[tuple[bytes, str]] = set()
        self._tokens: set[bytes] = set()
        if self.log_path is not None and self.log_path.exists():
            for line in self.log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._record(IssuanceEntry.from_json(json.loads(line)))

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    def _record(self, entry: IssuanceEntry) -> None:
        self._entries.append(entry)
        self._by_citizen.add((entry.election_id, entry.citizen_ref))
        self._tokens.add(entry.token)

    def sign_token(self, token: bytes, election_id: bytes) -> Mandate:
        """Sign a token without logging it. Honest issuance goes through issue_mandate."""
        sig = self.keypair.sign(Mandate.signed_payload(token, election_id))
        return Mandate(token, election_id, sig)

    def issue_mandate(self, election: ElectionConfig | bytes, citizen_ref: str) -> Mandate:
        election_id = election.election_id if isinstance(election, ElectionConfig) else election
        with self._lock:
            if (election_id, citizen_ref) in self._by_citizen:
                raise AlreadyIssued(f"citizen {citizen_ref!r} already holds a mandate")
            token = self._randbytes(TOKEN_SIZE)
            while token in self._tokens:
                token = self._randbytes(TOKEN_SIZE)
            mandate = self.sign_token(token, election_id)
            entry = IssuanceEntry(election_id, token, self._clock(), citizen_ref)
            if self.log_path is not None:
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.to_json(), sort_keys=True) + "\n")
            self._record(entry)
        return mandate

    def eligible_count(self, election_id: bytes | None = None) -> int:
        with self._lock:
            if election_id is None:
                return len(self._entries)
            return sum(1 for e in self._entries if e.election_id == election_id)

    def issued_tokens(self, election_id: bytes) -> set[bytes]:
        with self._lock:
            return {e.token for e in self._entries if e.election_id == election_id}
