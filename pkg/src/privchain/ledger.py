"""Simulated permissioned ledger with the verification-and-incentive contract.

One logical sequencer orders transactions by arrival and seals them into
hash-chained blocks of ``batch_size`` transactions. The world state is a
pure function of the transaction sequence, so reloading a ledger file and
replaying it reproduces the state exactly; location proofs are verified
once, at trade time, and the outcome is stored in the trade's ``region``.

Ledger file: one block per line, canonical JSON::

    {"block_hash": hex, "height": int, "prev_hash": hex, "txs": [tx, ...]}

``block_hash = sha256(canonical_json({"height", "prev_hash", "txs"}))``;
the genesis block has height 0, an all-zero ``prev_hash`` and no
transactions. Transaction ids are ``sha256(canonical_json(tx))``.
"""

from __future__ import annotations

import enum
import json
import os
import queue
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from privchain._encoding import DecodeError, canonical_json, from_hex, sha256
from privchain import bank as _bank
from privchain.bank import ReqPay, req_pay_message
from privchain.geo import RegionRegistry
from privchain.group import Commitment
from privchain.identity import Identity, Roster, verify_signature
from privchain.location import LocationProof, NotVerified, Reason, verify_location
from privchain.randomness import system_random
from privchain.tradeflow import AuthFailure, ConstituentBlob, Keyring, decrypt_constituents
from privchain.zkrp import VerificationKey

NOT_VERIFIED = "not verified"
PROOF_NOT_PROVIDED = "proof not provided"
RESERVED_REGIONS = (NOT_VERIFIED, PROOF_NOT_PROVIDED)
ZERO_HASH = bytes(32).hex()


class LedgerError(Exception):
    """Base class for rejected submissions."""


class DuplicateCommodity(LedgerError):
    pass


class UnknownParticipant(LedgerError):
    pass


class BadSignature(LedgerError):
    pass


class UnknownCommodity(LedgerError):
    pass


class AlreadyTraded(LedgerError):
    pass


class NotOwner(LedgerError):
    pass


class DataMismatch(LedgerError):
    pass


class UnknownConstituent(LedgerError):
    pass


class ConstituentNotTraded(LedgerError):
    pass


class RegionMismatch(LedgerError):
    pass


class DuplicateProduct(LedgerError):
    pass


class UnknownProduct(LedgerError):
    pass


class AlreadySold(LedgerError):
    pass


class UnknownReqPay(LedgerError, _bank.UnknownReqPay):
    pass


class AlreadyFinalized(LedgerError):
    pass


class IntegrityError(Exception):
    """A persisted ledger does not re-verify."""


def _opt_hex(b):
    return None if b is None else b.hex()


def _opt_bytes(s, length=None):
    return None if s is None else from_hex(s, length)


# -- transactions --------------------------------------------------------------

@dataclass(frozen=True)
class TxCreate:
    commodity_id: str
    data_hash: bytes
    proof_link: str | None
    seller_public_key: bytes
    seller_signature: bytes = b""

    kind = "create"

    def body(self) -> dict:
        return {"type": self.kind, "commodity_id": self.commodity_id,
                "data_hash": self.data_hash.hex(), "proof_link": self.proof_link,
                "seller_public_key": self.seller_public_key.hex()}

    def signing_bytes(self) -> bytes:
        return canonical_json(self.body())

    def to_dict(self) -> dict:
        return {**self.body(), "seller_signature": self.seller_signature.hex()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["commodity_id"], from_hex(d["data_hash"], 32), d["proof_link"],
                   from_hex(d["seller_public_key"], 32), from_hex(d["seller_signature"]))


@dataclass(frozen=True)
class TxTrade:
    commodity_id: str
    data_hash: bytes
    proof_link: str | None
    incentive_commitment: Commitment | None
    payment_blob: bytes | None
    seller_public_key: bytes
    buyer_public_key: bytes
    seller_signature: bytes = b""
    buyer_signature: bytes = b""
    payment_signature: bytes | None = None
    region: str = ""

    kind = "trade"

    def body(self) -> dict:
        return {
            "type": self.kind,
            "commodity_id": self.commodity_id,
            "data_hash": self.data_hash.hex(),
            "proof_link": self.proof_link,
            "incentive_commitment": None if self.incentive_commitment is None
            else self.incentive_commitment.hex(),
            "payment_blob": _opt_hex(self.payment_blob),
            "seller_public_key": self.seller_public_key.hex(),
            "buyer_public_key": self.buyer_public_key.hex(),
        }

    def signing_bytes(self) -> bytes:
        return canonical_json(self.body())

    @property
    def req_pay_id(self) -> str:
        """Digest of the trade body; stable under re-serialization."""
        return sha256(self.signing_bytes()).hex()

    def to_dict(self) -> dict:
        return {**self.body(), "seller_signature": self.seller_signature.hex(),
                "buyer_signature": self.buyer_signature.hex(),
                "payment_signature": _opt_hex(self.payment_signature), "region": self.region}

    @classmethod
    def from_dict(cls, d):
        com = d["incentive_commitment"]
        return cls(d["commodity_id"], from_hex(d["data_hash"], 32), d["proof_link"],
                   None if com is None else Commitment.from_bytes(from_hex(com)),
                   _opt_bytes(d["payment_blob"]), from_hex(d["seller_public_key"], 32),
                   from_hex(d["buyer_public_key"], 32), from_hex(d["seller_signature"]),
                   from_hex(d["buyer_signature"]), _opt_bytes(d["payment_signature"]), d["region"])


@dataclass(frozen=True)
class TxProduce:
    final_product_id: str
    encrypted_constituents: ConstituentBlob
    regions: tuple[str, ...]
    buyer_public_key: bytes
    buyer_signature: bytes = b""

    kind = "produce"

    def body(self) -> dict:
        return {"type": self.kind, "final_product_id": self.final_product_id,
                "encrypted_constituents": self.encrypted_constituents.to_bytes().hex(),
                "regions": list(self.regions), "buyer_public_key": self.buyer_public_key.hex()}

    def signing_bytes(self) -> bytes:
        return canonical_json(self.body())

    def to_dict(self) -> dict:
        return {**self.body(), "buyer_signature": self.buyer_signature.hex()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["final_product_id"],
                   ConstituentBlob.from_bytes(from_hex(d["encrypted_constituents"])),
                   tuple(d["regions"]), from_hex(d["buyer_public_key"], 32),
                   from_hex(d["buyer_signature"]))


class PaymentStatus(str, enum.Enum):
    PAID = "Paid"
    DISPUTED = "Disputed"


@dataclass(frozen=True)
class TxPaymentStatus:
    req_pay_id: str
    status: PaymentStatus

    kind = "payment"

    def to_dict(self) -> dict:
        return {"type": self.kind, "req_pay_id": self.req_pay_id, "status": self.status.value}

    @classmethod
    def from_dict(cls, d):
        return cls(d["req_pay_id"], PaymentStatus(d["status"]))


@dataclass(frozen=True)
class TxSale:
    """Retail sale of a final product; marks it Sold exactly once."""

    final_product_id: str
    owner_public_key: bytes
    signature: bytes = b""

    kind = "sale"

    def body(self) -> dict:
        return {"type": self.kind, "final_product_id": self.final_product_id,
                "owner_public_key": self.owner_public_key.hex()}

    def signing_bytes(self) -> bytes:
        return canonical_json(self.body())

    def to_dict(self) -> dict:
        return {**self.body(), "signature": self.signature.hex()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["final_product_id"], from_hex(d["owner_public_key"], 32), from_hex(d["signature"]))


_TX_TYPES = {t.kind: t for t in (TxCreate, TxTrade, TxProduce, TxPaymentStatus, TxSale)}


def tx_from_dict(d: dict):
    try:
        return _TX_TYPES[d["type"]].from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"bad transaction: {exc!r}") from None


def tx_id(tx) -> str:
    return sha256(canonical_json(tx.to_dict())).hex()


# -- client-side builders --------------------------------------------------------

def make_create(seller: Identity, commodity_id: str, data: bytes,
                proof_link: str | None = None) -> TxCreate:
    tx = TxCreate(commodity_id, sha256(data), proof_link, seller.public_key)
    return replace(tx, seller_signature=seller.sign(tx.signing_bytes()))


def make_trade(seller: Identity, buyer: Identity, commodity_id: str, data_hash: bytes,
               proof_link: str | None = None, incentive_commitment: Commitment | None = None,
               payment_blob: bytes | None = None) -> TxTrade:
    """Trade signed by both parties; the buyer also signs the payment request."""
    tx = TxTrade(commodity_id, data_hash, proof_link, incentive_commitment, payment_blob,
                 seller.public_key, buyer.public_key)
    body = tx.signing_bytes()
    pay_sig = None
    if incentive_commitment is not None and payment_blob is not None:
        pay_sig = buyer.sign(req_pay_message(tx.req_pay_id, incentive_commitment, payment_blob))
    return replace(tx, seller_signature=seller.sign(body), buyer_signature=buyer.sign(body),
                   payment_signature=pay_sig)


def make_produce(buyer: Identity, final_product_id: str, blob: ConstituentBlob, regions) -> TxProduce:
    tx = TxProduce(final_product_id, blob, tuple(regions), buyer.public_key)
    return replace(tx, buyer_signature=buyer.sign(tx.signing_bytes()))


def make_sale(owner: Identity, final_product_id: str) -> TxSale:
    tx = TxSale(final_product_id, owner.public_key)
    return replace(tx, signature=owner.sign(tx.signing_bytes()))


# -- blocks ----------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: str
    txs: tuple
    block_hash: str

    @staticmethod
    def compute_hash(height: int, prev_hash: str, tx_dicts) -> str:
        return sha256(canonical_json({"height": height, "prev_hash": prev_hash,
                                      "txs": list(tx_dicts)})).hex()

    @classmethod
    def seal(cls, height: int, prev_hash: str, txs) -> Block:
        txs = tuple(txs)
        return cls(height, prev_hash, txs, cls.compute_hash(height, prev_hash, [t.to_dict() for t in txs]))

    def to_dict(self) -> dict:
        return {"height": self.height, "prev_hash": self.prev_hash,
                "txs": [t.to_dict() for t in self.txs], "block_hash": self.block_hash}

    def to_line(self) -> bytes:
        return canonical_json(self.to_dict()) + b"\n"


# -- world state -----------------------------------------------------------------

class CommodityStatus(str, enum.Enum):
    CREATED = "Created"
    TRADED = "Traded"
    CONSUMED = "Consumed"


class ProductStatus(str, enum.Enum):
    REGISTERED = "Registered"
    SOLD = "Sold"


@dataclass
class CommodityRecord:
    commodity_id: str
    owner: bytes
    status: CommodityStatus
    region: str
    proof_link: str | None
    data_hash: bytes
    create_tx: str
    trade_tx: str | None = None


@dataclass
class FinalProductRecord:
    final_product_id: str
    regions: tuple[str, ...]
    encrypted_constituents: ConstituentBlob
    status: ProductStatus
    owner: bytes
    produce_tx: str
    constituents: tuple[str, ...] | None = field(default=None, repr=False)


@dataclass(frozen=True)
class Receipt:
    tx_id: str
    height: int


@dataclass(frozen=True)
class TradeReceipt(Receipt):
    region: str
    verdict: Reason | None
    req_pay: ReqPay | None


class QueueChannel:
    """In-process event channel for payment requests."""

    def __init__(self):
        self.queue: queue.Queue = queue.Queue()

    def publish(self, req: ReqPay) -> None:
        self.queue.put(req)

    def drain(self) -> list[ReqPay]:
        out = []
        while True:
            try:
                out.append(self.queue.get_nowait())
            except queue.Empty:
                return out


class FileChannel:
    """Line-delimited event file: one ``ReqPay.to_line()`` per request."""

    def __init__(self, path):
        self.path = Path(path)

    def publish(self, req: ReqPay) -> None:
        with open(self.path, "ab") as f:
            f.write(req.to_line())
            f.flush()

    def read(self, start: int = 0) -> tuple[list[ReqPay], int]:
        """Requests from line ``start`` onward, and the next line number."""
        if not self.path.exists():
            return [], start
        lines = self.path.read_bytes().splitlines()
        return [ReqPay.from_line(ln) for ln in lines[start:] if ln.strip()], len(lines)


class _NullChannel:
    def publish(self, req):
        pass


class Ledger:
    """Single-writer state machine; every public method takes the lock."""

    def __init__(self, vk: VerificationKey, registry: RegionRegistry, roster: Roster, *,
                 keyring: Keyring | None = None, check_constituents: bool = True,
                 batch_size: int = 1, path=None, events=None, fsync: bool = False,
                 rng=system_random):
        for name in RESERVED_REGIONS:
            if name in registry:
                raise ValueError(f"region name {name!r} is reserved")
        if batch_size < 1:
            raise ValueError("batch size must be positive")
        self.vk = vk
        self.registry = registry
        self.roster = roster
        self.keyring = keyring
        self.check_constituents = check_constituents and keyring is not None
        self.batch_size = batch_size
        self.path = Path(path) if path is not None else None
        self.events = events if events is not None else QueueChannel()
        self.fsync = fsync
        self.rng = rng
        self._lock = threading.RLock()
        self.blocks: list[Block] = []
        self._pending: list = []
        self.commodities: dict[str, CommodityRecord] = {}
        self.products: dict[str, FinalProductRecord] = {}
        self._txs: dict[str, object] = {}
        self._req_pays: dict[str, str] = {}  # req_pay_id -> trade tx id
        self._payment_status: dict[str, list[PaymentStatus]] = {}
        self._devices = {p.name: p.public_key for p in roster if p.role == "device"}
        genesis = Block.seal(0, ZERO_HASH, ())
        self.blocks.append(genesis)
        if self.path is not None and not self.path.exists():
            self._persist(genesis)

    # -- persistence

    def _persist(self, block: Block) -> None:
        if self.path is None:
            return
        with open(self.path, "ab") as f:
            f.write(block.to_line())
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())

    def _commit(self, tx) -> Receipt:
        tid = tx_id(tx)
        self._apply(tx, tid)
        self._pending.append(tx)
        height = len(self.blocks)
        if len(self._pending) >= self.batch_size:
            self._seal()
        return Receipt(tid, height)

    def _seal(self) -> None:
        if not self._pending:
            return
        block = Block.seal(len(self.blocks), self.blocks[-1].block_hash, self._pending)
        self.blocks.append(block)
        self._pending = []
        self._persist(block)

    def flush(self) -> None:
        """Seal any pending transactions into a (possibly short) block."""
        with self._lock:
            self._seal()

    @classmethod
    def load(cls, path, vk: VerificationKey, registry: RegionRegistry, roster: Roster, **kwargs) -> Ledger:
        """Re-verify every block of a ledger file and replay it."""
        path = Path(path)
        ledger = cls(vk, registry, roster, **{**kwargs, "path": None})
        lines = [ln for ln in path.read_bytes().splitlines() if ln.strip()]
        if not lines:
            raise IntegrityError(f"{path}: empty ledger file")
        # check the whole chain before replaying any of it
        blocks = []
        prev_hash = None
        for lineno, line in enumerate(lines, start=1):
            try:
                d = json.loads(line)
                height, prev, txd, bh = d["height"], d["prev_hash"], d["txs"], d["block_hash"]
            except (ValueError, KeyError, TypeError) as exc:
                raise IntegrityError(f"{path}:{lineno}: unreadable block ({exc})") from None
            if Block.compute_hash(height, prev, txd) != bh:
                raise IntegrityError(f"{path}:{lineno}: block hash mismatch")
            if height != lineno - 1 or prev != (ZERO_HASH if prev_hash is None else prev_hash):
                raise IntegrityError(f"{path}:{lineno}: broken chain link")
            try:
                txs = tuple(tx_from_dict(t) for t in txd)
            except DecodeError as exc:
                raise IntegrityError(f"{path}:{lineno}: {exc}") from None
            if height == 0 and (txs or bh != ledger.blocks[0].block_hash):
                raise IntegrityError(f"{path}:1: bad genesis block")
            blocks.append((lineno, Block(height, prev, txs, bh)))
            prev_hash = bh
        for lineno, block in blocks[1:]:
            for tx in block.txs:
                try:
                    ledger._apply(tx, tx_id(tx))
                except (KeyError, AttributeError, LedgerError, AuthFailure) as exc:
                    raise IntegrityError(f"{path}:{lineno}: transaction does not replay ({exc!r})") from None
            ledger.blocks.append(block)
        ledger.path = path
        return ledger

    # -- state transitions (shared by live submission and replay)

    def _apply(self, tx, tid: str) -> None:
        self._txs[tid] = tx
        if isinstance(tx, TxCreate):
            self.commodities[tx.commodity_id] = CommodityRecord(
                tx.commodity_id, tx.seller_public_key, CommodityStatus.CREATED, "",
                tx.proof_link, tx.data_hash, tid)
        elif isinstance(tx, TxTrade):
            rec = self.commodities[tx.commodity_id]
            rec.owner = tx.buyer_public_key
            rec.status = CommodityStatus.TRADED
            rec.region = tx.region
            rec.trade_tx = tid
            if self._emits_req_pay(tx):
                self._req_pays[tx.req_pay_id] = tid
        elif isinstance(tx, TxProduce):
            constituents = self._constituents(tx)
            if constituents is not None:
                for cid in constituents:
                    self.commodities[cid].status = CommodityStatus.CONSUMED
            self.products[tx.final_product_id] = FinalProductRecord(
                tx.final_product_id, tx.regions, tx.encrypted_constituents,
                ProductStatus.REGISTERED, tx.buyer_public_key, tid,
                None if constituents is None else tuple(constituents))
        elif isinstance(tx, TxPaymentStatus):
            self._payment_status.setdefault(tx.req_pay_id, []).append(tx.status)
        elif isinstance(tx, TxSale):
            self.products[tx.final_product_id].status = ProductStatus.SOLD

    @staticmethod
    def _emits_req_pay(tx: TxTrade) -> bool:
        return (tx.region not in RESERVED_REGIONS and tx.incentive_commitment is not None
                and tx.payment_blob is not None)

    def _constituents(self, tx: TxProduce):
        if not self.check_constituents:
            return None
        key = self.keyring.get(tx.encrypted_constituents.key_id)
        if key is None:
            return None
        return decrypt_constituents(key, tx.encrypted_constituents, tx.final_product_id)

    # -- submissions

    def _require(self, public_key: bytes, *roles: str) -> None:
        p = self.roster.by_key(public_key)
        if p is None or (roles and p.role not in roles):
            raise UnknownParticipant(f"key {public_key.hex()[:16]}... is not a registered {'/'.join(roles)}")

    def submit_create(self, tx: TxCreate) -> Receipt:
        with self._lock:
            self._require(tx.seller_public_key, "seller")
            if not verify_signature(tx.seller_public_key, tx.seller_signature, tx.signing_bytes()):
                raise BadSignature("seller signature on create does not verify")
            if tx.commodity_id in self.commodities:
                raise DuplicateCommodity(tx.commodity_id)
            return self._commit(tx)

    def visc_verify(self, proof: LocationProof) -> str | NotVerified:
        return verify_location(self.vk, self.registry, proof, self._devices, rng=self.rng)

    def submit_trade(self, tx: TxTrade, proof: LocationProof | bytes | None = None) -> TradeReceipt:
        """Record a trade; ``proof`` may be a decoded proof or its wire bytes.

        The proof is checked against the trade's ``proof_link`` and seller
        before the contract verifies it. Ownership moves to the buyer whatever
        the outcome; only the region attribute and the payment request differ.
        """
        with self._lock:
            rec = self.commodities.get(tx.commodity_id)
            if rec is None:
                raise UnknownCommodity(tx.commodity_id)
            if rec.status is not CommodityStatus.CREATED:
                raise AlreadyTraded(tx.commodity_id)
            if rec.owner != tx.seller_public_key:
                raise NotOwner(f"{tx.commodity_id} is not owned by the trade's seller")
            self._require(tx.seller_public_key, "seller")
            self._require(tx.buyer_public_key, "buyer")
            body = tx.signing_bytes()
            if not verify_signature(tx.seller_public_key, tx.seller_signature, body):
                raise BadSignature("seller signature on trade does not verify")
            if not verify_signature(tx.buyer_public_key, tx.buyer_signature, body):
                raise BadSignature("buyer signature on trade does not verify")
            if tx.payment_signature is not None:
                if tx.incentive_commitment is None or tx.payment_blob is None or not verify_signature(
                        tx.buyer_public_key, tx.payment_signature,
                        req_pay_message(tx.req_pay_id, tx.incentive_commitment, tx.payment_blob)):
                    raise BadSignature("buyer signature on payment request does not verify")
            elif tx.payment_blob is not None and tx.incentive_commitment is not None:
                raise BadSignature("payment request is unsigned")
            if tx.data_hash != rec.data_hash:
                raise DataMismatch(f"data hash of {tx.commodity_id} differs from its create transaction")

            verdict = None
            if proof is None:
                region = PROOF_NOT_PROVIDED
            else:
                result = self._verify_for_trade(tx, rec, proof)
                if isinstance(result, NotVerified):
                    region, verdict = NOT_VERIFIED, result.reason
                else:
                    region = result
            committed = replace(tx, region=region)
            receipt = self._commit(committed)
            req = self.emit_req_pay(committed) if self._emits_req_pay(committed) else None
            return TradeReceipt(receipt.tx_id, receipt.height, region, verdict, req)

    def _verify_for_trade(self, tx: TxTrade, rec: CommodityRecord, proof):
        if isinstance(proof, (bytes, bytearray)):
            link = sha256(bytes(proof)).hex()
            try:
                proof = LocationProof.from_bytes(bytes(proof))
            except DecodeError:
                proof = None
        else:
            try:
                link = proof.link()
            except (AttributeError, TypeError, ValueError, OverflowError):
                return NotVerified(Reason.MALFORMED)
        if tx.proof_link != link or (rec.proof_link is not None and rec.proof_link != link):
            return NotVerified(Reason.LINK_MISMATCH)
        if proof is None:
            return NotVerified(Reason.MALFORMED)
        if proof.seller_public_key != tx.seller_public_key:
            return NotVerified(Reason.SELLER_MISMATCH)
        return self.visc_verify(proof)

    def emit_req_pay(self, trade: TxTrade) -> ReqPay:
        req = ReqPay(trade.req_pay_id, trade.incentive_commitment, trade.payment_blob,
                     trade.buyer_public_key, trade.payment_signature)
        self.events.publish(req)
        return req

    def submit_produce(self, tx: TxProduce) -> Receipt:
        with self._lock:
            self._require(tx.buyer_public_key, "buyer")
            if not verify_signature(tx.buyer_public_key, tx.buyer_signature, tx.signing_bytes()):
                raise BadSignature("buyer signature on produce does not verify")
            if tx.final_product_id in self.products:
                raise DuplicateProduct(tx.final_product_id)
            if self.check_constituents:
                key = self.keyring.get(tx.encrypted_constituents.key_id)
                if key is None:
                    raise UnknownConstituent(f"no key {tx.encrypted_constituents.key_id!r} to check constituents")
                try:
                    ids = decrypt_constituents(key, tx.encrypted_constituents, tx.final_product_id)
                except AuthFailure as exc:
                    raise UnknownConstituent(str(exc)) from None
                if len(set(ids)) != len(ids):
                    raise UnknownConstituent("constituent listed twice")
                for cid in ids:
                    rec = self.commodities.get(cid)
                    if rec is None:
                        raise UnknownConstituent(cid)
                    if rec.status is CommodityStatus.CREATED:
                        raise ConstituentNotTraded(cid)
                    if rec.owner != tx.buyer_public_key:
                        raise NotOwner(f"{cid} is not owned by the producer")
                    if rec.status is not CommodityStatus.TRADED:
                        raise ConstituentNotTraded(f"{cid} already consumed")
                expected = tuple(self.commodities[cid].region for cid in ids)
                if tuple(tx.regions) != expected:
                    raise RegionMismatch(f"regions {list(tx.regions)} != verified {list(expected)}")
            return self._commit(tx)

    def submit_sale(self, tx: TxSale) -> Receipt:
        with self._lock:
            rec = self.products.get(tx.final_product_id)
            if rec is None:
                raise UnknownProduct(tx.final_product_id)
            if not verify_signature(tx.owner_public_key, tx.signature, tx.signing_bytes()):
                raise BadSignature("signature on sale does not verify")
            if rec.owner != tx.owner_public_key:
                raise NotOwner(f"{tx.final_product_id} is not owned by the signer")
            if rec.status is ProductStatus.SOLD:
                raise AlreadySold(tx.final_product_id)
            return self._commit(tx)

    def append_payment_status(self, req_pay_id: str, status) -> Receipt:
        status = PaymentStatus(status)
        with self._lock:
            if req_pay_id not in self._req_pays:
                raise UnknownReqPay(req_pay_id)
            if PaymentStatus.PAID in self._payment_status.get(req_pay_id, ()):
                raise AlreadyFinalized(req_pay_id)
            return self._commit(TxPaymentStatus(req_pay_id, status))

    # -- queries

    def consumer_query(self, final_product_id: str) -> list[str]:
        with self._lock:
            rec = self.products.get(final_product_id)
            if rec is None:
                raise UnknownProduct(final_product_id)
            return list(rec.regions)

    def trade_for_req_pay(self, req_pay_id: str) -> TxTrade | None:
        with self._lock:
            tid = self._req_pays.get(req_pay_id)
            return None if tid is None else self._txs[tid]

    def payment_status(self, req_pay_id: str) -> list[PaymentStatus]:
        with self._lock:
            return list(self._payment_status.get(req_pay_id, ()))

    def emitted_req_pays(self) -> list[str]:
        with self._lock:
            return list(self._req_pays)

    def transaction(self, tid: str):
        with self._lock:
            return self._txs.get(tid)

    def commodity(self, commodity_id: str) -> CommodityRecord | None:
        with self._lock:
            return self.commodities.get(commodity_id)

    def product(self, final_product_id: str) -> FinalProductRecord | None:
        with self._lock:
            return self.products.get(final_product_id)

    def state_digest(self) -> str:
        """Digest of the world state, for replay comparisons."""
        with self._lock:
            doc = {
                "commodities": {k: [r.owner.hex(), r.status.value, r.region, r.proof_link,
                                    r.data_hash.hex(), r.create_tx, r.trade_tx]
                                for k, r in self.commodities.items()},
                "products": {k: [list(r.regions), r.encrypted_constituents.to_bytes().hex(),
                                 r.status.value, r.owner.hex(), r.produce_tx]
                             for k, r in self.products.items()},
                "req_pays": self._req_pays,
                "payments": {k: [s.value for s in v] for k, v in self._payment_status.items()},
            }
            return sha256(canonical_json(doc)).hex()
