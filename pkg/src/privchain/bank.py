"""Off-chain incentive settlement.

The seller commits to the negotiated incentive with a Pedersen commitment
and puts it in the trade; the buyer encrypts ``(amount, blinding, seller_id)``
to the bank. The bank decrypts, recomputes the commitment and pays only on
an exact match, otherwise it records a dispute. Either way the outcome goes
back to the ledger as a bare ``(req_pay_id, status)`` record.

Payment envelope (``build_payment_blob``), fixed layout::

    0x01 | ephemeral X25519 public key (32) | nonce (12) | AES-256-GCM(plaintext) || tag (16)

    plaintext = amount (8, big-endian) | blinding (32, big-endian) | seller_id (UTF-8)

The AES key is HKDF-SHA256 over the X25519 shared secret with
salt = ephemeral_pub || bank_pub and info = ``b"privchain/req-pay/v1"``; the
version byte and ephemeral key are the associated data.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, NoEncryption, PrivateFormat, PublicFormat

from privchain._encoding import DecodeError, canonical_json, frame, from_hex, sha256
from privchain.group import (
    ORDER,
    Commitment,
    Opening,
    PedersenParams,
    commit,
    open_verify,
    random_scalar,
)
from privchain.identity import verify_signature
from privchain.randomness import system_random

MAX_AMOUNT = 2**62
_VERSION = 1
_INFO = b"privchain/req-pay/v1"
_SIG_LABEL = b"privchain/req-pay-signature/v1"


class BadSignature(ValueError):
    pass


class DecryptFailure(ValueError):
    pass


class UnknownReqPay(LookupError):
    pass


@dataclass(frozen=True)
class NegotiationRecord:
    """Agreed off-chain by seller and buyer before the trade."""

    amount: int
    blinding: int
    seller_id: str

    def __post_init__(self):
        if not 0 <= self.amount < MAX_AMOUNT:
            raise ValueError(f"incentive amount must be in [0, 2^62), got {self.amount}")
        if not 0 <= self.blinding < ORDER:
            raise ValueError("blinding must be reduced mod the group order")

    @classmethod
    def new(cls, amount: int, seller_id: str, rng=system_random) -> NegotiationRecord:
        return cls(amount, random_scalar(rng), seller_id)


def make_incentive_commitment(params: PedersenParams, negotiation: NegotiationRecord) -> Commitment:
    return commit(params, negotiation.amount, negotiation.blinding)


# -- envelope ------------------------------------------------------------------

def _x25519_public(key: X25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def _derive_key(shared: bytes, eph_pub: bytes, bank_pub: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=eph_pub + bank_pub, info=_INFO).derive(shared)


def build_payment_blob(negotiation: NegotiationRecord, bank_pub: bytes, rng=system_random) -> bytes:
    eph = X25519PrivateKey.from_private_bytes(rng.token_bytes(32))
    eph_pub = _x25519_public(eph)
    key = _derive_key(eph.exchange(X25519PublicKey.from_public_bytes(bank_pub)), eph_pub, bank_pub)
    nonce = rng.token_bytes(12)
    plaintext = (negotiation.amount.to_bytes(8, "big")
                 + negotiation.blinding.to_bytes(32, "big")
                 + negotiation.seller_id.encode())
    header = bytes([_VERSION]) + eph_pub
    return header + nonce + AESGCM(key).encrypt(nonce, plaintext, header)


def open_payment_blob(secret_key: X25519PrivateKey, blob: bytes) -> NegotiationRecord:
    if len(blob) < 1 + 32 + 12 + 16 + 40 or blob[0] != _VERSION:
        raise DecryptFailure("malformed payment blob")
    header, nonce, ct = blob[:33], blob[33:45], blob[45:]
    eph_pub = header[1:]
    bank_pub = _x25519_public(secret_key)
    try:
        key = _derive_key(secret_key.exchange(X25519PublicKey.from_public_bytes(eph_pub)), eph_pub, bank_pub)
        pt = AESGCM(key).decrypt(nonce, ct, header)
        return NegotiationRecord(int.from_bytes(pt[:8], "big"), int.from_bytes(pt[8:40], "big"),
                                 pt[40:].decode())
    except (InvalidTag, ValueError, UnicodeDecodeError):
        raise DecryptFailure("payment blob failed authentication") from None


# -- payment request -----------------------------------------------------------

def req_pay_message(req_pay_id: str, com_inc: Commitment, ciphertext: bytes) -> bytes:
    return frame(_SIG_LABEL, bytes.fromhex(req_pay_id), com_inc.to_bytes(), ciphertext)


@dataclass(frozen=True)
class ReqPay:
    req_pay_id: str
    com_inc: Commitment
    ciphertext: bytes
    buyer_public_key: bytes
    buyer_signature: bytes

    def signature_valid(self) -> bool:
        return verify_signature(self.buyer_public_key, self.buyer_signature,
                                req_pay_message(self.req_pay_id, self.com_inc, self.ciphertext))

    def to_dict(self) -> dict:
        return {
            "req_pay_id": self.req_pay_id,
            "com_inc": self.com_inc.hex(),
            "ciphertext": self.ciphertext.hex(),
            "buyer_public_key": self.buyer_public_key.hex(),
            "buyer_signature": self.buyer_signature.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ReqPay:
        try:
            return cls(
                from_hex(d["req_pay_id"], 32).hex(),
                Commitment.from_bytes(from_hex(d["com_inc"])),
                from_hex(d["ciphertext"]),
                from_hex(d["buyer_public_key"], 32),
                from_hex(d["buyer_signature"], 64),
            )
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"bad ReqPay: {exc}") from None

    def to_line(self) -> bytes:
        """One line of the event file: canonical JSON plus ``\\n``."""
        return canonical_json(self.to_dict()) + b"\n"

    @classmethod
    def from_line(cls, line: bytes | str) -> ReqPay:
        try:
            return cls.from_dict(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DecodeError(f"bad ReqPay line: {exc}") from None

    def digest(self) -> str:
        return sha256(canonical_json(self.to_dict())).hex()


def sign_req_pay(buyer, req_pay_id: str, com_inc: Commitment, ciphertext: bytes) -> ReqPay:
    """A payment request for an existing trade, e.g. a corrected one after a dispute."""
    sig = buyer.sign(req_pay_message(req_pay_id, com_inc, ciphertext))
    return ReqPay(req_pay_id, com_inc, ciphertext, buyer.public_key, sig)


# -- settlement ----------------------------------------------------------------

@dataclass(frozen=True)
class Paid:
    req_pay_id: str
    amount: int
    seller_id: str
    status = "Paid"


@dataclass(frozen=True)
class Disputed:
    req_pay_id: str
    commodity_id: str
    reason: str
    status = "Disputed"


def _outcome_to_dict(o) -> dict:
    if isinstance(o, Paid):
        return {"status": "Paid", "req_pay_id": o.req_pay_id, "amount": o.amount, "seller_id": o.seller_id}
    return {"status": "Disputed", "req_pay_id": o.req_pay_id, "commodity_id": o.commodity_id,
            "reason": o.reason}


def _outcome_from_dict(d: dict):
    if d["status"] == "Paid":
        return Paid(d["req_pay_id"], int(d["amount"]), d["seller_id"])
    return Disputed(d["req_pay_id"], d["commodity_id"], d["reason"])


class BankState:
    """Balances and logs of the (single, sequential) bank consumer.

    Processing a request is exactly-once: a byte-identical request that was
    already handled returns its recorded outcome, and a request id that was
    already paid is never paid again.
    """

    def __init__(self, secret_key: X25519PrivateKey, params: PedersenParams):
        self.secret_key = secret_key
        self.params = params
        self.balances: dict[str, int] = {}
        self.payments: list[Paid] = []
        self.disputes: list[Disputed] = []
        self._processed: dict[str, object] = {}
        self._paid: dict[str, Paid] = {}
        self._lock = threading.Lock()

    @classmethod
    def generate(cls, params: PedersenParams, rng=system_random) -> BankState:
        return cls(X25519PrivateKey.from_private_bytes(rng.token_bytes(32)), params)

    @property
    def public_key(self) -> bytes:
        return _x25519_public(self.secret_key)

    def dispute_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for d in self.disputes:
            counts[d.commodity_id] = counts.get(d.commodity_id, 0) + 1
        return counts

    def process(self, req: ReqPay, ledger):
        with self._lock:
            return self._process(req, ledger)

    def _process(self, req: ReqPay, ledger):
        digest = req.digest()
        if digest in self._processed:
            return self._processed[digest]
        if req.req_pay_id in self._paid:
            return self._paid[req.req_pay_id]
        if not req.signature_valid():
            raise BadSignature("buyer signature on payment request does not verify")
        trade = ledger.trade_for_req_pay(req.req_pay_id)
        if trade is None:
            raise UnknownReqPay(req.req_pay_id)
        if trade.buyer_public_key != req.buyer_public_key:
            raise BadSignature("payment request not signed by the trade's buyer")

        cid = trade.commodity_id
        outcome = None
        if trade.incentive_commitment is None or trade.incentive_commitment != req.com_inc:
            outcome = Disputed(req.req_pay_id, cid, "commitment differs from ledger")
        else:
            try:
                neg = open_payment_blob(self.secret_key, req.ciphertext)
            except DecryptFailure:
                outcome = Disputed(req.req_pay_id, cid, "decrypt failure")
            else:
                seller = ledger.roster.by_name(neg.seller_id)
                if seller is None or seller.public_key != trade.seller_public_key:
                    outcome = Disputed(req.req_pay_id, cid, "seller mismatch")
                elif not open_verify(self.params, req.com_inc, Opening(neg.amount, neg.blinding)):
                    outcome = Disputed(req.req_pay_id, cid, "commitment mismatch")
                else:
                    outcome = Paid(req.req_pay_id, neg.amount, neg.seller_id)

        ledger.append_payment_status(req.req_pay_id, outcome.status)
        if isinstance(outcome, Paid):
            self.balances[outcome.seller_id] = self.balances.get(outcome.seller_id, 0) + outcome.amount
            self.payments.append(outcome)
            self._paid[req.req_pay_id] = outcome
        else:
            self.disputes.append(outcome)
        self._processed[digest] = outcome
        return outcome

    # persistence: the secret key is stored separately by the caller
    def to_dict(self) -> dict:
        return {
            "format": "privchain-bank-state/1",
            "balances": dict(sorted(self.balances.items())),
            "payments": [_outcome_to_dict(p) for p in self.payments],
            "disputes": [_outcome_to_dict(d) for d in self.disputes],
            "processed": {k: _outcome_to_dict(v) for k, v in sorted(self._processed.items())},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path, secret_key: X25519PrivateKey, params: PedersenParams) -> BankState:
        state = cls(secret_key, params)
        p = Path(path)
        if not p.exists():
            return state
        doc = json.loads(p.read_text())
        if doc.get("format") != "privchain-bank-state/1":
            raise DecodeError(f"{path}: unknown bank state format")
        state.balances = {k: int(v) for k, v in doc["balances"].items()}
        state.payments = [_outcome_from_dict(d) for d in doc["payments"]]
        state.disputes = [_outcome_from_dict(d) for d in doc["disputes"]]
        state._processed = {k: _outcome_from_dict(v) for k, v in doc["processed"].items()}
        state._paid = {p.req_pay_id: p for p in state.payments}
        return state


def bank_process(state: BankState, req: ReqPay, ledger):
    """Settle one payment request; returns :class:`Paid` or :class:`Disputed`."""
    return state.process(req, ledger)


def save_bank_key(path, state: BankState) -> None:
    raw = state.secret_key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    p = Path(path)
    p.write_text(raw.hex() + "\n")
    p.chmod(0o600)


def load_bank_key(path) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(from_hex(Path(path).read_text().strip(), 32))
