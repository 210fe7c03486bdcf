"""``privchain`` command-line driver.

Stateful commands share a state directory (``--state``, default
``./privchain-state``) created by ``setup``::

    config.path       absolute path of the scenario config
    zkrp-keys.json    proving and verification keys
    bank.pub          bank X25519 public key (hex)
    ledger.jsonl      the ledger, one block per line
    events.jsonl      payment requests for the bank, one per line
    bank-state.json   balances and settlement logs
    proofs/           off-chain location proofs, named by content hash
    negotiations.json incentive terms the trading parties agreed off-chain

Exit codes: 0 success, 2 protocol rejection, 3 configuration error,
1 benchmark check failed.
"""

from __future__ import annotations

import argparse
import fcntl
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from privchain.bench import bench
from privchain.ledger import IntegrityError
from privchain.scenario import (
    ConfigError,
    Rejected,
    ScenarioConfig,
    Workspace,
    derive_bank_key,
    roster_from_seed,
    run_scenario,
)
from privchain.zkrp import load_keys, save_keys, zkrp_setup

EXIT_OK = 0
EXIT_BENCH_FAILED = 1
EXIT_REJECTED = 2
EXIT_CONFIG = 3


@contextmanager
def _workspace(state: Path):
    if not (state / "config.path").exists():
        raise ConfigError(f"{state}: not a state directory (run 'privchain setup' first)")
    with open(state / ".lock", "w") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        config = ScenarioConfig.load((state / "config.path").read_text().strip())
        try:
            keys = load_keys(state / "zkrp-keys.json")
            ws = Workspace(config, state_dir=state, keys=keys, fsync=True)
        except (IntegrityError, ValueError, OSError) as exc:
            raise ConfigError(f"{state}: {exc}") from None
        try:
            yield ws
        finally:
            ws.close()


def cmd_setup(args) -> int:
    config = ScenarioConfig.load(args.config)
    state = Path(args.state)
    state.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    pk, _ = zkrp_setup(config.base_u, config.max_digits_l, b"privchain/admin|" + config.seed_bytes)
    elapsed = time.perf_counter() - t0
    save_keys(state / "zkrp-keys.json", pk)
    (state / "config.path").write_text(str(Path(args.config).resolve()) + "\n")
    bank_pub = derive_bank_key(config.seed_bytes).public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    (state / "bank.pub").write_text(bank_pub.hex() + "\n")
    with _workspace(state) as ws:
        regions = len(ws.registry)
        participants = len(ws.roster)
    print(f"setup u={config.base_u} l={config.max_digits_l} regions={regions} "
          f"participants={participants} seconds={elapsed:.3f}")
    return EXIT_OK


def cmd_register_roster(args) -> int:
    entries = []
    for item in args.participants:
        role, sep, name = item.partition(":")
        if not sep or not name:
            raise ConfigError(f"expected role:name, got {item!r}")
        entries.append((role, name))
    roster = roster_from_seed(args.seed.encode(), entries)
    text = roster.dumps()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {len(roster)} participants to {args.out}")
    return EXIT_OK


def _print_fields(fields: dict) -> None:
    for k, v in fields.items():
        print(f"{k}={v}")


def cmd_create(args) -> int:
    with _workspace(Path(args.state)) as ws:
        lat, lon = args.at if args.at else (0.0, 0.0)
        _print_fields(ws.create(args.cid, args.seller, lat, lon, args.region, args.device,
                                args.data, not args.no_proof))
    return EXIT_OK


def cmd_trade(args) -> int:
    with _workspace(Path(args.state)) as ws:
        _print_fields(ws.trade(args.cid, args.buyer, args.incentive, args.buyer_amount,
                               not args.no_proof))
    return EXIT_OK


def cmd_resolve(args) -> int:
    with _workspace(Path(args.state)) as ws:
        _print_fields(ws.resolve(args.cid))
    return EXIT_OK


def cmd_produce(args) -> int:
    with _workspace(Path(args.state)) as ws:
        _print_fields(ws.produce(args.product, args.buyer, args.cids))
    return EXIT_OK


def cmd_query(args) -> int:
    with _workspace(Path(args.state)) as ws:
        for name in ws.query(args.product):
            print(name)
    return EXIT_OK


def cmd_sale(args) -> int:
    with _workspace(Path(args.state)) as ws:
        _print_fields(ws.sale(args.product, args.owner))
    return EXIT_OK


def cmd_audit(args) -> int:
    with _workspace(Path(args.state)) as ws:
        for b in ws.audit(args.product):
            print(f"commodity={b.commodity_id} create={b.create_tx} "
                  f"trade={b.trade_tx or 'none'} region={b.region!r}")
    return EXIT_OK


def cmd_bank_run(args) -> int:
    state = Path(args.state)
    idle = 0
    while True:
        with _workspace(state) as ws:
            rows = ws.settle()
            balances = dict(ws.bank.balances)
        for row in rows:
            print(" ".join(f"{k}={v}" for k, v in row.items()), flush=True)
        if not args.follow:
            break
        idle = 0 if rows else idle + 1
        if args.max_idle is not None and idle >= args.max_idle:
            break
        time.sleep(args.interval)
    for seller, amount in sorted(balances.items()):
        print(f"balance {seller}={amount}")
    return EXIT_OK


def cmd_bench(args) -> int:
    report = bench(base_u=args.u, max_digits_l=args.l, trials=args.trials,
                   region_cells=args.region_cells, fsync=not args.no_fsync)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_BENCH_FAILED


def cmd_run(args) -> int:
    config = ScenarioConfig.load(args.config)
    try:
        script = Path(args.script).read_text()
    except OSError as exc:
        raise ConfigError(f"{args.script}: {exc.strerror}") from None
    status, transcript = run_scenario(config, script, source=args.script)
    if args.out:
        Path(args.out).write_text(transcript)
    else:
        sys.stdout.write(transcript)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privchain",
                                     description="Private provenance ledger simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def stateful(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--state", default="privchain-state", help="state directory")
        return p

    p = stateful("setup", "generate keys and an empty ledger from a scenario config")
    p.add_argument("config")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("register-roster", help="write a roster with keys derived from a seed")
    p.add_argument("--seed", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("participants", nargs="+", metavar="ROLE:NAME")
    p.set_defaults(func=cmd_register_roster)

    p = stateful("create", "a seller registers a commodity with its location proof")
    p.add_argument("cid")
    p.add_argument("seller")
    p.add_argument("--at", nargs=2, type=float, metavar=("LAT", "LON"))
    p.add_argument("--region")
    p.add_argument("--device")
    p.add_argument("--data")
    p.add_argument("--no-proof", action="store_true")
    p.set_defaults(func=cmd_create)

    p = stateful("trade", "sell a commodity to a buyer")
    p.add_argument("cid")
    p.add_argument("buyer")
    p.add_argument("--incentive", type=int)
    p.add_argument("--buyer-amount", type=int, help="amount the buyer actually encrypts")
    p.add_argument("--no-proof", action="store_true")
    p.set_defaults(func=cmd_trade)

    p = stateful("resolve", "re-send the agreed payment request for a disputed trade")
    p.add_argument("cid")
    p.set_defaults(func=cmd_resolve)

    p = stateful("produce", "register a final product made of traded commodities")
    p.add_argument("product")
    p.add_argument("buyer")
    p.add_argument("cids", nargs="+")
    p.set_defaults(func=cmd_produce)

    p = stateful("query", "print a product's verified regions, one per line")
    p.add_argument("product")
    p.set_defaults(func=cmd_query)

    p = stateful("sale", "mark a final product sold")
    p.add_argument("product")
    p.add_argument("owner")
    p.set_defaults(func=cmd_sale)

    p = stateful("audit", "trace a product's constituents with the trade-flow key")
    p.add_argument("product")
    p.set_defaults(func=cmd_audit)

    p = stateful("bank-run", "settle pending payment requests")
    p.add_argument("--follow", action="store_true", help="keep polling the event file")
    p.add_argument("--interval", type=float, default=1.0)
    p.add_argument("--max-idle", type=int, help="with --follow, stop after this many empty polls")
    p.set_defaults(func=cmd_bank_run)

    p = sub.add_parser("bench", help="time every phase and check the expected orderings")
    p.add_argument("--u", type=int, default=10)
    p.add_argument("--l", type=int, default=8)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--region-cells", type=int, default=600)
    p.add_argument("--no-fsync", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run", help="run a scenario script against a fresh ledger")
    p.add_argument("config")
    p.add_argument("script")
    p.add_argument("--out", help="write the transcript here instead of stdout")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Rejected as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
