"""Scenario configuration, a stateful workspace, and the script runner.

Config file: ``key = value`` lines, ``#`` comments. Paths are relative to
the config file::

    registry   = regions.csv
    roster     = roster.txt
    keyring    = keyring.txt
    base_u     = 10
    max_digits = 8
    batch_size = 1
    seed       = vintage-2021

Script file: one action per line, split with shell quoting rules. A line
prefixed with ``expect-fail`` must be rejected; any other rejection makes
the run fail. Actions::

    create  ID SELLER --at LAT LON --region NAME --device DEVICE [--data TEXT] [--no-proof]
    trade   ID BUYER [--incentive N] [--buyer-amount N] [--no-proof]
    settle
    produce PRODUCT BUYER ID [ID ...]
    query   PRODUCT
    sale    PRODUCT OWNER
    audit   PRODUCT
    resolve ID

``resolve`` has the buyer of a disputed trade send the bank a corrected
payment request: the agreed amount and blinding, encrypted afresh, for the
same request id and commitment.

Participant signing keys are derived from the seed and the participant's
name; the roster must list the matching public keys (``register-roster``
writes such a roster).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shlex
from dataclasses import dataclass
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey

from privchain._encoding import sha256
from privchain.bank import (
    BankState,
    NegotiationRecord,
    build_payment_blob,
    make_incentive_commitment,
    sign_req_pay,
)
from privchain.geo import GeoCoord, GridIndex, OutOfUtmBounds, RegionRegistry, RegistryError
from privchain.group import Commitment, Opening, commit, random_scalar
from privchain.identity import Identity, Roster, RosterError, derive_identity
from privchain.ledger import (
    FileChannel,
    Ledger,
    LedgerError,
    PaymentStatus,
    QueueChannel,
    make_create,
    make_produce,
    make_sale,
    make_trade,
)
from privchain.location import GpsDevice, LocationProof, SignedCoordinates, prove_location
from privchain.randomness import SeededRandom
from privchain.tradeflow import AuthFailure, Keyring, KeyringError, audit_trace, encrypt_constituents
from privchain.zkrp import InvalidParameter, OutOfRange, ProvingKey, VerificationKey, zkrp_setup


class ConfigError(Exception):
    """Unusable configuration or script; reported with file and line."""


class Rejected(Exception):
    """A protocol-level refusal of an action."""


@dataclass(frozen=True)
class ScenarioConfig:
    registry_path: Path
    roster_path: Path
    keyring_path: Path
    base_u: int = 10
    max_digits_l: int = 8
    batch_size: int = 1
    seed: str = "privchain"

    @property
    def seed_bytes(self) -> bytes:
        return self.seed.encode()

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        keys = {"registry": "registry_path", "roster": "roster_path", "keyring": "keyring_path",
                "base_u": "base_u", "max_digits": "max_digits_l", "batch_size": "batch_size",
                "seed": "seed"}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or key not in keys:
                raise ConfigError(f"{path}:{lineno}: expected one of {', '.join(keys)} = value")
            if key.endswith(("_u", "digits", "size")):
                try:
                    value = int(value)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: {key} must be an integer") from None
            elif key in ("registry", "roster", "keyring"):
                value = path.parent / value
                if not value.exists():
                    raise ConfigError(f"{path}:{lineno}: {value} does not exist")
            values[keys[key]] = value
        missing = {"registry_path", "roster_path", "keyring_path"} - set(values)
        if missing:
            raise ConfigError(f"{path}: missing {', '.join(sorted(missing))}")
        return cls(**values)


def roster_from_seed(seed: bytes, entries) -> Roster:
    """Roster for ``(role, name)`` pairs with keys derived from ``seed``."""
    try:
        return Roster(derive_identity(seed, role, name).participant for role, name in entries)
    except RosterError as exc:
        raise ConfigError(str(exc)) from None


def derive_bank_key(seed: bytes) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(hashlib.sha256(b"privchain/bank/v1|" + seed).digest())


class Workspace:
    """All parties of one simulated deployment, driven action by action.

    With ``state_dir`` the ledger, event channel, bank state and off-chain
    proof store live on disk so separate CLI invocations can share them;
    otherwise everything is in memory.
    """

    def __init__(self, config: ScenarioConfig, *, state_dir=None, keys=None, fsync: bool = False):
        self.config = config
        try:
            self.registry = RegionRegistry.load(config.registry_path)
            self.roster = Roster.load(config.roster_path)
            self.keyring = Keyring.load(config.keyring_path)
        except (RegistryError, RosterError, KeyringError, OSError) as exc:
            raise ConfigError(str(exc)) from None
        self.rng = SeededRandom(b"privchain/scenario-rng|" + config.seed_bytes)
        if keys is None:
            try:
                keys = zkrp_setup(config.base_u, config.max_digits_l,
                                  b"privchain/admin|" + config.seed_bytes)
            except InvalidParameter as exc:
                raise ConfigError(f"zkrp parameters: {exc}") from None
        self.pk: ProvingKey
        self.vk: VerificationKey
        self.pk, self.vk = keys
        self.identities: dict[str, Identity] = {}
        for p in self.roster:
            ident = derive_identity(config.seed_bytes, p.role, p.name)
            if ident.public_key != p.public_key:
                raise ConfigError(f"{config.roster_path}: key of {p.name!r} does not match the seed")
            self.identities[p.name] = ident

        self.state_dir = Path(state_dir) if state_dir is not None else None
        bank_key = derive_bank_key(config.seed_bytes)
        if self.state_dir is None:
            self.events = QueueChannel()
            self.ledger = Ledger(self.vk, self.registry, self.roster, keyring=self.keyring,
                                 batch_size=config.batch_size, events=self.events, rng=self.rng)
            self.bank = BankState(bank_key, self.pk.params)
            self._proofs: dict[str, bytes] = {}
            self.negotiations: dict[str, NegotiationRecord] = {}
        else:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            (self.state_dir / "proofs").mkdir(exist_ok=True)
            self.events = FileChannel(self.state_dir / "events.jsonl")
            ledger_path = self.state_dir / "ledger.jsonl"
            kwargs = dict(keyring=self.keyring, batch_size=config.batch_size,
                          events=self.events, fsync=fsync, rng=self.rng)
            if ledger_path.exists():
                self.ledger = Ledger.load(ledger_path, self.vk, self.registry, self.roster, **kwargs)
            else:
                self.ledger = Ledger(self.vk, self.registry, self.roster, path=ledger_path, **kwargs)
            self.bank = BankState.load(self.state_dir / "bank-state.json", bank_key, self.pk.params)
            self._proofs = None
            self.negotiations = self._load_negotiations()
            # a fresh stream per ledger state, so separate invocations never
            # reuse nonces or blindings
            tip = self.ledger.blocks[-1].block_hash.encode()
            self.rng = SeededRandom(b"privchain/scenario-rng|" + config.seed_bytes + b"|" + tip)
            self.ledger.rng = self.rng

    # -- helpers

    def identity(self, name: str, role: str | None = None) -> Identity:
        ident = self.identities.get(name)
        if ident is None or (role is not None and ident.role != role):
            raise Rejected(f"{name!r} is not a registered {role or 'participant'}")
        return ident

    def _store_proof(self, data: bytes) -> str:
        link = sha256(data).hex()
        if self._proofs is None:
            (self.state_dir / "proofs" / f"{link}.bin").write_bytes(data)
        else:
            self._proofs[link] = data
        return link

    def _fetch_proof(self, link: str) -> bytes | None:
        if self._proofs is None:
            p = self.state_dir / "proofs" / f"{link}.bin"
            return p.read_bytes() if p.exists() else None
        return self._proofs.get(link)

    # the parties' private copies of what they agreed, keyed by commodity
    def _load_negotiations(self) -> dict:
        p = self.state_dir / "negotiations.json"
        if not p.exists():
            return {}
        doc = json.loads(p.read_text())
        return {cid: NegotiationRecord(d["amount"], int(d["blinding"], 16), d["seller_id"])
                for cid, d in doc.items()}

    def close(self) -> None:
        self.ledger.flush()
        if self.state_dir is not None:
            self.bank.save(self.state_dir / "bank-state.json")
            doc = {cid: {"amount": n.amount, "blinding": f"{n.blinding:064x}", "seller_id": n.seller_id}
                   for cid, n in sorted(self.negotiations.items())}
            (self.state_dir / "negotiations.json").write_text(json.dumps(doc, indent=1) + "\n")

    # -- actions; each returns the transcript fields

    def create(self, cid: str, seller: str, lat: float, lon: float, region: str, device: str,
               data: str | None = None, with_proof: bool = True) -> dict:
        s = self.identity(seller, "seller")
        out = {}
        link = None
        if with_proof:
            dev = GpsDevice(self.identity(device, "device"), self.pk.params)
            try:
                claimed = self.registry.get(region)
                reading = dev.read(GeoCoord(lat, lon), timestamp=len(self.ledger.blocks), rng=self.rng)
            except (RegistryError, OutOfUtmBounds) as exc:
                raise Rejected(str(exc)) from None
            cell = GridIndex(reading.zone, reading.south, reading.opening_x.message, reading.opening_y.message)
            try:
                proof = prove_location(self.pk, reading, claimed, s, rng=self.rng)
            except (OutOfRange, ValueError):
                # the seller cannot prove the claim honestly; it swaps in an
                # in-region reading the device never signed
                proof = self._substituted_proof(reading, claimed, s)
                out["proof"] = "substituted"
            else:
                out["proof"] = "honest"
            link = self._store_proof(proof.to_bytes())
            out["cell"] = f"{cell.zone}{'S' if cell.south else 'N'}:{cell.e10},{cell.n10}"
        payload = (data if data is not None else f"{cid}/{seller}").encode()
        try:
            r = self.ledger.submit_create(make_create(s, cid, payload, link))
        except LedgerError as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None
        return {"height": r.height, "tx": r.tx_id, **out}

    def _substituted_proof(self, reading, region, seller) -> LocationProof:
        p = self.pk.params
        e10 = (region.e10_lo + region.e10_hi) // 2
        n10 = (region.n10_lo + region.n10_hi) // 2
        rx, ry = random_scalar(self.rng), random_scalar(self.rng)
        fake = SignedCoordinates(commit(p, e10, rx), commit(p, n10, ry), region.zone, region.south,
                                 reading.device_id, reading.timestamp, reading.device_signature,
                                 Opening(e10, rx), Opening(n10, ry))
        return prove_location(self.pk, fake, region, seller, rng=self.rng)

    def trade(self, cid: str, buyer: str, incentive: int | None = None,
              buyer_amount: int | None = None, with_proof: bool = True) -> dict:
        b = self.identity(buyer, "buyer")
        rec = self.ledger.commodity(cid)
        if rec is None:
            raise Rejected(f"UnknownCommodity: {cid}")
        owner = self.roster.by_key(rec.owner)
        s = self.identity(owner.name)
        com = blob = neg = None
        if incentive is not None:
            neg = NegotiationRecord.new(incentive, s.name, self.rng)
            com: Commitment = make_incentive_commitment(self.pk.params, neg)
            paid = NegotiationRecord(incentive if buyer_amount is None else buyer_amount,
                                     neg.blinding, neg.seller_id)
            blob = build_payment_blob(paid, self.bank.public_key, self.rng)
        tx = make_trade(s, b, cid, rec.data_hash, rec.proof_link, com, blob)
        proof = self._fetch_proof(rec.proof_link) if (with_proof and rec.proof_link) else None
        try:
            r = self.ledger.submit_trade(tx, proof)
        except LedgerError as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None
        if neg is not None:
            self.negotiations[cid] = neg
        out = {"height": r.height, "tx": r.tx_id, "region": r.region}
        if r.verdict is not None:
            out["reason"] = r.verdict.value
        out["req_pay"] = r.req_pay.req_pay_id if r.req_pay is not None else "none"
        return out

    def settle(self) -> list[dict]:
        """Let the bank work through every payment request it has not seen."""
        if isinstance(self.events, QueueChannel):
            pending = self.events.drain()
        else:
            pending, _ = self.events.read()
        results = []
        for req in pending:
            before = len(self.bank.payments) + len(self.bank.disputes)
            try:
                outcome = self.bank.process(req, self.ledger)
            except (LedgerError, ValueError, LookupError) as exc:
                results.append({"req_pay": req.req_pay_id, "status": "rejected",
                                "reason": type(exc).__name__})
                continue
            if len(self.bank.payments) + len(self.bank.disputes) == before:
                continue  # already settled in an earlier run
            row = {"req_pay": req.req_pay_id, "status": outcome.status}
            if outcome.status == "Paid":
                row.update(amount=outcome.amount, seller=outcome.seller_id)
            else:
                row.update(commodity=outcome.commodity_id, reason=outcome.reason)
            results.append(row)
        return results

    def resolve(self, cid: str) -> dict:
        rec = self.ledger.commodity(cid)
        trade = self.ledger.transaction(rec.trade_tx) if rec is not None and rec.trade_tx else None
        if trade is None or trade.req_pay_id not in self.ledger.emitted_req_pays():
            raise Rejected(f"UnknownReqPay: no payment request for {cid}")
        if PaymentStatus.PAID in self.ledger.payment_status(trade.req_pay_id):
            raise Rejected(f"AlreadyFinalized: {trade.req_pay_id}")
        neg = self.negotiations.get(cid)
        if neg is None:
            raise Rejected(f"no negotiation record for {cid}")
        buyer = self.identity(self.roster.by_key(trade.buyer_public_key).name)
        blob = build_payment_blob(neg, self.bank.public_key, self.rng)
        req = sign_req_pay(buyer, trade.req_pay_id, trade.incentive_commitment, blob)
        self.events.publish(req)
        return {"req_pay": req.req_pay_id}

    def produce(self, fp: str, buyer: str, cids) -> dict:
        b = self.identity(buyer, "buyer")
        regions = []
        for cid in cids:
            rec = self.ledger.commodity(cid)
            regions.append(rec.region if rec is not None else "")
        blob = encrypt_constituents(self.keyring.default, cids, fp, self.rng)
        try:
            r = self.ledger.submit_produce(make_produce(b, fp, blob, regions))
        except LedgerError as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None
        return {"height": r.height, "tx": r.tx_id}

    def query(self, fp: str) -> list[str]:
        try:
            return self.ledger.consumer_query(fp)
        except LedgerError as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None

    def sale(self, fp: str, owner: str) -> dict:
        try:
            r = self.ledger.submit_sale(make_sale(self.identity(owner), fp))
        except LedgerError as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None
        return {"height": r.height, "tx": r.tx_id}

    def audit(self, fp: str) -> list:
        try:
            return audit_trace(self.keyring.default, self.ledger, fp)
        except (LedgerError, AuthFailure) as exc:
            raise Rejected(f"{type(exc).__name__}: {exc}") from None


# -- script runner --------------------------------------------------------------

class _ScriptParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _action_parser() -> argparse.ArgumentParser:
    top = _ScriptParser(prog="", add_help=False)
    sub = top.add_subparsers(dest="action", required=True, parser_class=_ScriptParser)
    p = sub.add_parser("create", add_help=False)
    p.add_argument("cid")
    p.add_argument("seller")
    p.add_argument("--at", nargs=2, type=float, metavar=("LAT", "LON"))
    p.add_argument("--region")
    p.add_argument("--device")
    p.add_argument("--data")
    p.add_argument("--no-proof", action="store_true")
    p = sub.add_parser("trade", add_help=False)
    p.add_argument("cid")
    p.add_argument("buyer")
    p.add_argument("--incentive", type=int)
    p.add_argument("--buyer-amount", type=int)
    p.add_argument("--no-proof", action="store_true")
    sub.add_parser("settle", add_help=False)
    p = sub.add_parser("produce", add_help=False)
    p.add_argument("product")
    p.add_argument("buyer")
    p.add_argument("cids", nargs="+")
    for name in ("query", "audit"):
        sub.add_parser(name, add_help=False).add_argument("product")
    sub.add_parser("resolve", add_help=False).add_argument("cid")
    p = sub.add_parser("sale", add_help=False)
    p.add_argument("product")
    p.add_argument("owner")
    return top


def parse_script(text: str, source: str = "<script>") -> list[tuple[int, bool, argparse.Namespace]]:
    parser = _action_parser()
    actions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            words = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        if not words:
            continue
        expect_fail = words[0] == "expect-fail"
        if expect_fail:
            words = words[1:]
        try:
            ns = parser.parse_args(words)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        if ns.action == "create" and not ns.no_proof and not (ns.at and ns.region and ns.device):
            raise ConfigError(f"{source}:{lineno}: create needs --at, --region and --device (or --no-proof)")
        actions.append((lineno, expect_fail, ns))
    return actions


def _value(v) -> str:
    if isinstance(v, str) and v and not any(c.isspace() or c in "\"=" for c in v):
        return v
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


def _fmt(fields: dict) -> str:
    return " ".join(f"{k}={_value(v)}" for k, v in fields.items())


def _perform(ws: Workspace, ns) -> list[str]:
    a = ns.action
    if a == "create":
        lat, lon = ns.at if ns.at else (0.0, 0.0)
        return [_fmt({"id": ns.cid, **ws.create(ns.cid, ns.seller, lat, lon, ns.region, ns.device,
                                                ns.data, not ns.no_proof)})]
    if a == "trade":
        return [_fmt({"id": ns.cid, **ws.trade(ns.cid, ns.buyer, ns.incentive, ns.buyer_amount,
                                               not ns.no_proof)})]
    if a == "settle":
        rows = ws.settle()
        return [_fmt(r) for r in rows] or ["nothing pending"]
    if a == "resolve":
        return [_fmt({"id": ns.cid, **ws.resolve(ns.cid)})]
    if a == "produce":
        return [_fmt({"id": ns.product, **ws.produce(ns.product, ns.buyer, ns.cids)})]
    if a == "query":
        return [_fmt({"id": ns.product, "regions": ws.query(ns.product)})]
    if a == "sale":
        return [_fmt({"id": ns.product, **ws.sale(ns.product, ns.owner)})]
    if a == "audit":
        return [_fmt({"id": ns.product})] + [
            _fmt({"commodity": b.commodity_id, "create": b.create_tx, "trade": b.trade_tx or "none",
                  "region": b.region}) for b in ws.audit(ns.product)]
    raise ConfigError(f"unknown action {a}")  # pragma: no cover - the parser rejects these


def run_scenario(config: ScenarioConfig, script: str, *, source: str = "<script>",
                 state_dir=None) -> tuple[int, str]:
    """Run ``script`` against a fresh deployment; returns (exit status, transcript).

    Exit status is 0 when every action behaved as marked and 2 otherwise.
    Configuration and parse errors raise :class:`ConfigError`.
    """
    actions = parse_script(script, source)
    ws = Workspace(config, state_dir=state_dir)
    lines = [f"# seed={config.seed} u={config.base_u} l={config.max_digits_l} batch={config.batch_size}"]
    status = 0
    for lineno, expect_fail, ns in actions:
        tag = f"{lineno} {ns.action}"
        try:
            results = _perform(ws, ns)
        except Rejected as exc:
            if expect_fail:
                lines.append(f"{tag} rejected-as-expected {_fmt({'error': str(exc)})}")
            else:
                lines.append(f"{tag} REJECTED {_fmt({'error': str(exc)})}")
                status = 2
            continue
        if expect_fail:
            lines.append(f"{tag} UNEXPECTED-SUCCESS {results[0]}")
            status = 2
            continue
        lines.extend(f"{tag} ok {r}" for r in results)
    ws.close()
    lines.append(f"# exit={status} blocks={len(ws.ledger.blocks)} state={ws.ledger.state_digest()}")
    return status, "\n".join(lines) + "\n"


__all__ = [
    "ConfigError",
    "Rejected",
    "ScenarioConfig",
    "Workspace",
    "derive_bank_key",
    "roster_from_seed",
    "parse_script",
    "run_scenario",
]

