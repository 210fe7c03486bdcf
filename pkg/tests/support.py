"""Helpers shared by the ledger, bank and acceptance tests."""

import math
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey

from privchain.bank import BankState, NegotiationRecord, build_payment_blob, make_incentive_commitment
from privchain.geo import GridIndex, Region, RegionRegistry
from privchain.identity import Identity, Roster, derive_identity
from privchain.ledger import PROOF_NOT_PROVIDED, Ledger, make_create, make_produce, make_sale, make_trade
from privchain.location import GpsDevice, prove_location
from privchain.tradeflow import Keyring, TradeFlowKey, encrypt_constituents

SEED = b"test-world"

REGIONS = [
    Region("Barossa", 54, True, 31000, 31599, 617400, 617999),
    Region("Eden Valley", 54, True, 32300, 32899, 616700, 617299),
    Region("Clare Valley", 54, True, 27600, 28199, 625100, 625699),
    Region("Tiny", 54, True, 40000, 40004, 600000, 600009),
]

PARTICIPANTS = [
    ("seller", "farm-a"), ("seller", "farm-b"), ("seller", "farm-c"),
    ("buyer", "winery"), ("buyer", "cellar"),
    ("device", "gps-1"), ("device", "gps-2"),
    ("bank", "bank"), ("regulator", "regulator"),
]


@dataclass
class World:
    pk: object
    vk: object
    registry: RegionRegistry
    ids: dict[str, Identity]
    roster: Roster
    keyring: Keyring
    devices: dict = field(default_factory=dict)

    @property
    def params(self):
        return self.pk.params

    def ledger(self, **kwargs) -> Ledger:
        kwargs.setdefault("keyring", self.keyring)
        return Ledger(self.vk, self.registry, self.roster, **kwargs)


def build_world(keys) -> World:
    pk, vk = keys
    ids = {name: derive_identity(SEED, role, name) for role, name in PARTICIPANTS}
    roster = Roster(i.participant for i in ids.values())
    keyring = Keyring([TradeFlowKey("k1", bytes(range(32)))])
    devices = {n: i.public_key for n, i in ids.items() if i.role == "device"}
    return World(pk, vk, RegionRegistry(REGIONS), ids, roster, keyring, devices)


def make_bank(world, rng) -> BankState:
    return BankState(X25519PrivateKey.from_private_bytes(rng.token_bytes(32)), world.params)


def location_proof(world, region_name, seller, rng, *, de=3, dn=4, device="gps-1"):
    region = world.registry.get(region_name)
    gps = GpsDevice(world.ids[device], world.params)
    cell = GridIndex(region.zone, region.south, region.e10_lo + de, region.n10_lo + dn)
    return prove_location(world.pk, gps.read_cell(cell, timestamp=0, rng=rng), region,
                          world.ids[seller], rng=rng)


def created(world, ledger, cid, seller, rng, region=None):
    """Create ``cid`` (with a proof for ``region`` if given); returns the proof or None."""
    proof = location_proof(world, region, seller, rng) if region else None
    ledger.submit_create(make_create(world.ids[seller], cid, cid.encode(),
                                     proof.link() if proof else None))
    return proof


def trade_tx(world, ledger, cid, seller, buyer, rng, *, amount=100, buyer_amount=None,
             bank_pub=None, with_com=True, with_blob=True, proof=None):
    neg = NegotiationRecord.new(amount, seller, rng)
    com = make_incentive_commitment(world.params, neg) if with_com else None
    blob = None
    if with_blob:
        paid = NegotiationRecord(amount if buyer_amount is None else buyer_amount, neg.blinding, seller)
        blob = build_payment_blob(paid, bank_pub or bytes(range(32)), rng)
    link = proof.link() if proof is not None else ledger.commodity(cid).proof_link
    tx = make_trade(world.ids[seller], world.ids[buyer], cid, ledger.commodity(cid).data_hash,
                    link, com, blob)
    return tx, neg


def populated(world, rng, path, **kw):
    ledger = world.ledger(rng=rng, path=path, **kw)
    bank = make_bank(world, rng)
    ids = []
    for i, region in enumerate(["Barossa", "Eden Valley", None, "Barossa"]):
        cid = f"lot{i}"
        proof = created(world, ledger, cid, "farm-a", rng, region)
        tx, _ = trade_tx(world, ledger, cid, "farm-a", "winery", rng, bank_pub=bank.public_key,
                         buyer_amount=None if i else 99)
        ledger.submit_trade(tx, proof)
        ids.append(cid)
    for req in ledger.events.drain():
        bank.process(req, ledger)
    ledger.submit_produce(make_produce(world.ids["winery"], "fp", encrypt_constituents(
        world.keyring.default, ids[1:3], "fp", rng), ["Eden Valley", PROOF_NOT_PROVIDED]))
    ledger.submit_sale(make_sale(world.ids["winery"], "fp"))
    ledger.flush()
    return ledger


def snyder_utm(lat, lon):
    """Transverse Mercator by the classic USGS power series in (lon - lon0).

    A different formulation from the package's Krueger series, used as a
    live cross-check. Good to centimetres within a zone."""
    a, f, k0 = 6378137.0, 1 / 298.257223563, 0.9996
    e2 = f * (2 - f)
    ep2 = e2 / (1 - e2)
    zone = int((lon + 180) // 6) + 1
    lon0 = math.radians((zone - 1) * 6 - 177)
    phi, lam = math.radians(lat), math.radians(lon)
    N = a / math.sqrt(1 - e2 * math.sin(phi) ** 2)
    T = math.tan(phi) ** 2
    C = ep2 * math.cos(phi) ** 2
    A = (lam - lon0) * math.cos(phi)
    M = a * ((1 - e2 / 4 - 3 * e2**2 / 64 - 5 * e2**3 / 256) * phi
             - (3 * e2 / 8 + 3 * e2**2 / 32 + 45 * e2**3 / 1024) * math.sin(2 * phi)
             + (15 * e2**2 / 256 + 45 * e2**3 / 1024) * math.sin(4 * phi)
             - (35 * e2**3 / 3072) * math.sin(6 * phi))
    x = k0 * N * (A + (1 - T + C) * A**3 / 6
                  + (5 - 18 * T + T**2 + 72 * C - 58 * ep2) * A**5 / 120)
    y = k0 * (M + N * math.tan(phi) * (A**2 / 2 + (5 - T + 9 * C + 4 * C**2) * A**4 / 24
                                      + (61 - 58 * T + T**2 + 600 * C - 330 * ep2) * A**6 / 720))
    easting = 500000 + x
    northing = y + (10000000 if lat < 0 else 0)
    return zone, lat < 0, easting, northing
