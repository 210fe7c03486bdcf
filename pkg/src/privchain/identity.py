"""Participant keys and the permissioned roster.

Roster file format: one participant per line, ``role name public_key_hex``
(Ed25519, 32 bytes raw). ``#`` starts a comment. Roles are listed in
``ROLES``; names are unique.

For desk-scale simulation a participant's key can be derived from a
scenario seed and its name (:func:`derive_identity`).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

ROLES = ("admin", "seller", "buyer", "bank", "device", "regulator", "retailer")
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64


class RosterError(ValueError):
    pass


def public_bytes(key: Ed25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


@dataclass(frozen=True)
class Identity:
    """A participant together with its signing key (held by the participant only)."""

    role: str
    name: str
    signing_key: Ed25519PrivateKey

    @property
    def public_key(self) -> bytes:
        return public_bytes(self.signing_key)

    def sign(self, message: bytes) -> bytes:
        return self.signing_key.sign(message)

    @property
    def participant(self) -> Participant:
        return Participant(self.role, self.name, self.public_key)


def derive_identity(seed: bytes, role: str, name: str) -> Identity:
    if role not in ROLES:
        raise RosterError(f"unknown role {role!r}")
    material = hashlib.sha256(b"privchain/identity/v1|" + seed + b"|" + name.encode()).digest()
    return Identity(role, name, Ed25519PrivateKey.from_private_bytes(material))


@dataclass(frozen=True)
class Participant:
    role: str
    name: str
    public_key: bytes


class Roster:
    """Load-time list of registered participants (stands in for the CA)."""

    def __init__(self, participants=()):
        self._by_name: dict[str, Participant] = {}
        self._by_key: dict[bytes, Participant] = {}
        for p in participants:
            if p.role not in ROLES:
                raise RosterError(f"unknown role {p.role!r} for {p.name!r}")
            if p.name in self._by_name:
                raise RosterError(f"duplicate participant {p.name!r}")
            if p.public_key in self._by_key:
                raise RosterError(f"public key of {p.name!r} already registered")
            self._by_name[p.name] = p
            self._by_key[p.public_key] = p

    def __iter__(self):
        return iter(self._by_name.values())

    def __len__(self):
        return len(self._by_name)

    def by_name(self, name: str) -> Participant | None:
        return self._by_name.get(name)

    def by_key(self, public_key: bytes) -> Participant | None:
        return self._by_key.get(bytes(public_key))

    def is_registered(self, public_key: bytes, role: str | None = None) -> bool:
        p = self.by_key(public_key)
        return p is not None and (role is None or p.role == role)

    def dumps(self) -> str:
        return "".join(f"{p.role} {p.name} {p.public_key.hex()}\n" for p in self)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> Roster:
        out = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3:
                raise RosterError(f"{source}:{lineno}: expected 'role name public_key_hex'")
            role, name, key_hex = fields
            try:
                key = bytes.fromhex(key_hex)
            except ValueError:
                raise RosterError(f"{source}:{lineno}: public key is not hex") from None
            if len(key) != PUBLIC_KEY_LEN:
                raise RosterError(f"{source}:{lineno}: public key must be 32 bytes")
            out.append(Participant(role, name, key))
        try:
            return cls(out)
        except RosterError as exc:
            raise RosterError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path) -> Roster:
        return cls.loads(Path(path).read_text(), source=str(path))
