"""Host-machine timings of every protocol phase and their ratios.

Both trade paths run against the same file-backed ledger with ``fsync``
on each block, so the baseline carries the same persistence cost as the
proof path. The proof reaches the contract as wire bytes, so decoding is
part of the measured cost, as it would be for a real contract. Trials of
the two paths alternate to cancel slow drift of the host.
"""

from __future__ import annotations

import statistics
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from privchain._encoding import sha256
from privchain.bank import NegotiationRecord, build_payment_blob, make_incentive_commitment
from privchain.geo import GridIndex, Region, RegionRegistry
from privchain.identity import Roster, derive_identity
from privchain.ledger import Ledger, make_create, make_produce, make_trade
from privchain.location import GpsDevice, prove_location, verify_location
from privchain.randomness import SeededRandom
from privchain.scenario import derive_bank_key
from privchain.tradeflow import Keyring, TradeFlowKey, encrypt_constituents
from privchain.zkrp import digits_needed, zkrp_setup

TRADE_RATIO_BAND = (1.5, 50.0)
PRODUCE_RATIO_MAX = 3.0
PROVE_MAX_S = 5.0
SETUP_MAX_S = 10.0
PHASES = ("setup", "prove", "verify", "trade-with-proof", "trade-baseline",
          "produce-with-encryption", "produce-baseline")


@dataclass(frozen=True)
class Timing:
    samples_ms: tuple[float, ...]

    @property
    def trials(self) -> int:
        return len(self.samples_ms)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.samples_ms)

    @property
    def stdev(self) -> float:
        return statistics.stdev(self.samples_ms) if self.trials > 1 else 0.0

    @property
    def cv(self) -> float:
        return self.stdev / self.mean if self.mean else 0.0


@dataclass
class BenchReport:
    base_u: int
    max_digits_l: int
    trials: int
    region_cells: int
    digits: int
    timings: dict[str, Timing] = field(default_factory=dict)

    @property
    def trade_ratio(self) -> float:
        return self.timings["trade-with-proof"].mean / self.timings["trade-baseline"].mean

    @property
    def produce_ratio(self) -> float:
        return self.timings["produce-with-encryption"].mean / self.timings["produce-baseline"].mean

    def checks(self) -> list[tuple[str, bool, str]]:
        t = self.timings
        lo, hi = TRADE_RATIO_BAND
        return [
            ("trade-with-proof > trade-baseline", t["trade-with-proof"].mean > t["trade-baseline"].mean,
             f"{t['trade-with-proof'].mean:.3f} ms vs {t['trade-baseline'].mean:.3f} ms"),
            (f"trade ratio in [{lo}, {hi}]", lo <= self.trade_ratio <= hi, f"{self.trade_ratio:.2f}x"),
            (f"produce ratio < {PRODUCE_RATIO_MAX}", self.produce_ratio < PRODUCE_RATIO_MAX,
             f"{self.produce_ratio:.2f}x"),
            (f"prove mean < {PROVE_MAX_S} s", t["prove"].mean < PROVE_MAX_S * 1000,
             f"{t['prove'].mean:.3f} ms"),
            (f"setup < {SETUP_MAX_S} s", t["setup"].mean < SETUP_MAX_S * 1000,
             f"{t['setup'].mean:.3f} ms"),
        ]

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks())

    def to_text(self) -> str:
        lines = [f"bench u={self.base_u} l={self.max_digits_l} trials={self.trials} "
                 f"region_cells={self.region_cells} digits_per_bound={self.digits}"]
        for name in PHASES:
            t = self.timings[name]
            lines.append(f"phase={name} trials={t.trials} mean_ms={t.mean:.3f} "
                         f"stdev_ms={t.stdev:.3f} cv={t.cv:.3f}")
        lines.append(f"ratio trade={self.trade_ratio:.2f} produce={self.produce_ratio:.2f}")
        for name, passed, detail in self.checks():
            lines.append(f"check {'PASS' if passed else 'FAIL'} {name} ({detail})")
        return "\n".join(lines) + "\n"


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def bench(*, base_u: int = 10, max_digits_l: int = 8, trials: int = 10, region_cells: int = 600,
          seed: str = "privchain-bench", workdir=None, fsync: bool = True) -> BenchReport:
    """Measure all phases; ``region_cells`` is the side of the square region in 10 m cells."""
    if trials < 10:
        raise ValueError("at least 10 trials per phase")
    rng = SeededRandom(f"bench|{seed}")
    sb = seed.encode()

    start = time.perf_counter()
    pk, vk = zkrp_setup(base_u, max_digits_l, b"bench-admin|" + sb)
    setup_ms = _ms(start)

    region = Region("bench-region", 54, True, 31000, 31000 + region_cells - 1,
                    617000, 617000 + region_cells - 1)
    registry = RegionRegistry([region])
    seller = derive_identity(sb, "seller", "bench-seller")
    buyer = derive_identity(sb, "buyer", "bench-buyer")
    device = derive_identity(sb, "device", "bench-device")
    roster = Roster([seller.participant, buyer.participant, device.participant])
    keyring = Keyring([TradeFlowKey.generate("bench", rng)])
    bank_pub = derive_bank_key(sb).public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    gps = GpsDevice(device, pk.params)
    devices = {device.name: device.public_key}

    samples = {name: [] for name in PHASES}
    samples["setup"].append(setup_ms)

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        ledger = Ledger(vk, registry, roster, keyring=keyring, path=Path(tmp) / "ledger.jsonl",
                        fsync=fsync, rng=rng)
        plain = Ledger(vk, registry, roster, keyring=keyring, check_constituents=False,
                       path=Path(tmp) / "ledger-plain.jsonl", fsync=fsync, rng=rng)

        def fresh_trade(tag: str, ledger_: Ledger, link: str | None):
            data = f"bench/{tag}".encode()
            ledger_.submit_create(make_create(seller, tag, data, link))
            neg = NegotiationRecord.new(100, seller.name, rng)
            com = make_incentive_commitment(pk.params, neg)
            blob = build_payment_blob(neg, bank_pub, rng)
            return make_trade(seller, buyer, tag, sha256(data), link, com, blob)

        for i in range(trials):
            cell = GridIndex(54, True, region.e10_lo + rng.randbelow(region_cells),
                             region.n10_lo + rng.randbelow(region_cells))
            reading = gps.read_cell(cell, timestamp=i, rng=rng)

            start = time.perf_counter()
            proof = prove_location(pk, reading, region, seller, rng=rng)
            samples["prove"].append(_ms(start))

            start = time.perf_counter()
            result = verify_location(vk, registry, proof, devices, rng=rng)
            samples["verify"].append(_ms(start))
            if result != region.name:
                raise RuntimeError(f"honest proof failed to verify: {result}")

            tx_p = fresh_trade(f"p{i}", ledger, proof.link())
            tx_b = fresh_trade(f"b{i}", ledger, None)
            order = [(tx_p, proof.to_bytes(), "trade-with-proof"), (tx_b, None, "trade-baseline")]
            for tx, wire, name in (order if i % 2 == 0 else order[::-1]):
                start = time.perf_counter()
                receipt = ledger.submit_trade(tx, wire)
                samples[name].append(_ms(start))
                if wire is not None and receipt.region != region.name:
                    raise RuntimeError(f"trade not attributed: {receipt.region}")

        # constituents for the produce phase, traded without proofs (untimed)
        lots = {}
        for key, l_ in (("enc", ledger), ("plain", plain)):
            lots[key] = []
            for j in range(3 * trials):
                tag = f"lot{j}"
                l_.submit_trade(fresh_trade(tag, l_, None), None)
                lots[key].append(tag)

        for i in range(trials):
            fp = f"fp{i}"
            ids = lots["enc"][3 * i:3 * i + 3]
            regions = [ledger.commodity(c).region for c in ids]
            pre_blob = encrypt_constituents(keyring.default, ids, fp, rng)
            for which in (("enc", "plain") if i % 2 == 0 else ("plain", "enc")):
                if which == "enc":
                    start = time.perf_counter()
                    blob = encrypt_constituents(keyring.default, ids, fp, rng)
                    ledger.submit_produce(make_produce(buyer, fp, blob, regions))
                    samples["produce-with-encryption"].append(_ms(start))
                else:
                    start = time.perf_counter()
                    plain.submit_produce(make_produce(buyer, fp, pre_blob, regions))
                    samples["produce-baseline"].append(_ms(start))

    report = BenchReport(base_u, max_digits_l, trials, region_cells,
                         digits_needed(region_cells, base_u))
    report.timings = {name: Timing(tuple(v)) for name, v in samples.items()}
    return report
