"""Encrypted constituent lists for produce transactions.

Blob layout (``ConstituentBlob.to_bytes``)::

    key_id length (1 byte) | key_id (ASCII) | nonce (12) | AES-256-GCM ciphertext || tag (16)

Plaintext is the framed list of UTF-8 commodity ids (order preserved).
Associated data is ``b"privchain/constituents/v1" || frame(key_id, final_product_id)``,
so a blob cannot be moved to another product.

Keyring file: one key per line, ``key_id base64(32-byte key)``; ``#`` comments.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from privchain._encoding import DecodeError, frame, unframe
from privchain.randomness import system_random

NONCE_LEN = 12
TAG_LEN = 16
_AAD_LABEL = b"privchain/constituents/v1"


class AuthFailure(ValueError):
    """Decryption failed: wrong key, wrong product, or tampered blob."""


class KeyringError(ValueError):
    pass


@dataclass(frozen=True)
class TradeFlowKey:
    key_id: str
    key: bytes

    def __post_init__(self):
        if len(self.key) != 32:
            raise KeyringError("trade-flow keys are 256-bit")
        if not self.key_id or not self.key_id.isascii() or len(self.key_id) > 255 or " " in self.key_id:
            raise KeyringError(f"bad key id {self.key_id!r}")

    @classmethod
    def generate(cls, key_id: str, rng=system_random) -> TradeFlowKey:
        return cls(key_id, rng.token_bytes(32))

    def __repr__(self):
        return f"TradeFlowKey(key_id={self.key_id!r})"


@dataclass(frozen=True)
class ConstituentBlob:
    key_id: str
    nonce: bytes
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        kid = self.key_id.encode("ascii")
        return bytes([len(kid)]) + kid + self.nonce + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> ConstituentBlob:
        if not data:
            raise DecodeError("empty blob")
        n = data[0]
        if len(data) < 1 + n + NONCE_LEN + TAG_LEN:
            raise DecodeError("blob too short")
        try:
            key_id = data[1:1 + n].decode("ascii")
        except UnicodeDecodeError:
            raise DecodeError("bad key id") from None
        return cls(key_id, data[1 + n:1 + n + NONCE_LEN], data[1 + n + NONCE_LEN:])


def _aad(key_id: str, final_product_id: str) -> bytes:
    return _AAD_LABEL + frame(key_id.encode(), final_product_id.encode())


def encrypt_constituents(key: TradeFlowKey, ids, final_product_id: str,
                         rng=system_random) -> ConstituentBlob:
    ids = list(ids)
    if not ids:
        raise ValueError("a product needs at least one constituent")
    nonce = rng.token_bytes(NONCE_LEN)
    plaintext = frame(*(i.encode() for i in ids))
    ct = AESGCM(key.key).encrypt(nonce, plaintext, _aad(key.key_id, final_product_id))
    return ConstituentBlob(key.key_id, nonce, ct)


def decrypt_constituents(key: TradeFlowKey, blob: ConstituentBlob, final_product_id: str) -> list[str]:
    if blob.key_id != key.key_id:
        raise AuthFailure(f"blob is under key {blob.key_id!r}, not {key.key_id!r}")
    if len(blob.nonce) != NONCE_LEN or len(blob.ciphertext) < TAG_LEN:
        raise AuthFailure("truncated blob")
    try:
        plaintext = AESGCM(key.key).decrypt(blob.nonce, blob.ciphertext,
                                            _aad(key.key_id, final_product_id))
        return [p.decode() for p in unframe(plaintext)]
    except (InvalidTag, DecodeError, UnicodeDecodeError):
        raise AuthFailure("constituent blob failed authentication") from None


class Keyring:
    def __init__(self, keys=()):
        self._keys = {}
        for k in keys:
            if k.key_id in self._keys:
                raise KeyringError(f"duplicate key id {k.key_id!r}")
            self._keys[k.key_id] = k

    def __contains__(self, key_id):
        return key_id in self._keys

    def __iter__(self):
        return iter(self._keys.values())

    def get(self, key_id: str) -> TradeFlowKey | None:
        return self._keys.get(key_id)

    @property
    def default(self) -> TradeFlowKey:
        if not self._keys:
            raise KeyringError("keyring is empty")
        return next(iter(self._keys.values()))

    def dumps(self) -> str:
        return "".join(f"{k.key_id} {base64.b64encode(k.key).decode()}\n" for k in self)

    def save(self, path) -> None:
        p = Path(path)
        p.write_text(self.dumps())
        p.chmod(0o600)

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> Keyring:
        keys = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                key_id, b64 = line.split()
                keys.append(TradeFlowKey(key_id, base64.b64decode(b64, validate=True)))
            except (ValueError, binascii.Error) as exc:
                raise KeyringError(f"{source}:{lineno}: {exc}") from None
        return cls(keys)

    @classmethod
    def load(cls, path) -> Keyring:
        return cls.loads(Path(path).read_text(), source=str(path))


@dataclass(frozen=True)
class TraceBranch:
    """One constituent of a product, followed back to its create transaction."""

    commodity_id: str
    create_tx: str
    trade_tx: str | None
    region: str
    seller_public_key: bytes
    buyer_public_key: bytes | None


def audit_trace(key: TradeFlowKey, ledger, final_product_id: str) -> list[TraceBranch]:
    """Reverse the hiding for an authorized auditor.

    Raises ``AuthFailure`` before building anything if the key does not open
    the product's blob, and the ledger's ``UnknownProduct`` for an unknown id.
    """
    from privchain.ledger import UnknownProduct

    rec = ledger.product(final_product_id)
    if rec is None:
        raise UnknownProduct(final_product_id)
    ids = decrypt_constituents(key, rec.encrypted_constituents, final_product_id)
    branches = []
    for cid in ids:
        com = ledger.commodity(cid)
        if com is None:
            raise UnknownProduct(f"{final_product_id}: constituent {cid} is not on the ledger")
        create = ledger.transaction(com.create_tx)
        trade = ledger.transaction(com.trade_tx) if com.trade_tx else None
        branches.append(TraceBranch(cid, com.create_tx, com.trade_tx,
                                    trade.region if trade is not None else "",
                                    create.seller_public_key,
                                    trade.buyer_public_key if trade is not None else None))
    return branches
