"""Walk through one bottle of wine, step by step, using the library directly.

    python demos/wine_bottle.py

Three farms sell grape lots to a winery. Each farm proves its vineyard lies
inside a named region without revealing where. The bank pays incentives
without learning amounts from the ledger. The consumer sees only region
names. The same story as a CLI script lives in demos/vintage/.
"""

from pathlib import Path

from privchain.scenario import Rejected, ScenarioConfig, Workspace

HERE = Path(__file__).resolve().parent


def show(title, value):
    if isinstance(value, dict):
        value = " ".join(f"{k}={v[:12] if k in ('tx', 'req_pay') else v}" for k, v in value.items())
    print(f"{title:<34} {value}")


def main():
    ws = Workspace(ScenarioConfig.load(HERE / "vintage" / "scenario.conf"))

    print("-- farms register their lots")
    show("hill-farm, inside Barossa", ws.create("lot-1", "hill-farm", -34.530, 138.960, "Barossa", "gps-17"))
    show("creek-farm, inside Barossa", ws.create("lot-2", "creek-farm", -34.512, 138.978, "Barossa", "gps-17"))
    show("ridge-farm, inside Eden Valley",
         ws.create("lot-3", "ridge-farm", -34.600, 139.100, "Eden Valley", "gps-42"))
    # coast-farm is near Adelaide but claims Barossa anyway
    show("coast-farm, claims Barossa", ws.create("lot-4", "coast-farm", -35.220, 138.550, "Barossa", "gps-42"))

    print("\n-- the winery buys; the contract checks each proof")
    for cid, amount in (("lot-1", 120), ("lot-2", 80)):
        show(f"{cid} for {amount}", ws.trade(cid, "winery", amount))
    show("lot-3, winery encrypts 85 not 95", ws.trade("lot-3", "winery", 95, buyer_amount=85))
    show("lot-4 to the cellar door", ws.trade("lot-4", "cellar-door", 60))
    try:
        ws.trade("lot-1", "cellar-door", 120)
    except Rejected as exc:
        show("lot-1 sold a second time", f"rejected ({exc})")

    print("\n-- the bank settles what it can")
    for row in ws.settle():
        show("settled", row)
    show("winery re-sends lot-3 terms", ws.resolve("lot-3"))
    for row in ws.settle():
        show("after the correction", row)

    print("\n-- the winery bottles three lots; a consumer scans the label")
    show("produce", ws.produce("bottle-0001", "winery", ["lot-1", "lot-2", "lot-3"]))
    show("consumer sees", ws.query("bottle-0001"))
    show("lot-4 on the ledger", ws.ledger.commodity("lot-4").region)

    print("\n-- an auditor with the trade-flow key traces the bottle")
    for b in ws.audit("bottle-0001"):
        show(b.commodity_id, b.region)
    ws.close()


if __name__ == "__main__":
    main()
