"""How much does privacy cost per trade on this machine?

    python demos/overheads.py [--trials N]

Times a trade that carries a location proof against one that does not, and
a product registration with and without encrypting its constituent list.
Absolute times depend on the host; the ratios are the interesting part.
"""

import argparse

from privchain.bench import bench


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=10)
    args = parser.parse_args()

    report = bench(trials=args.trials)
    t = report.timings
    print(f"a proof covers a {report.region_cells} x {report.region_cells} cell region "
          f"({report.region_cells * 10 / 1000:.0f} km a side), {report.digits} digits per bound")
    print(f"proving takes {t['prove'].mean:.1f} ms and checking it {t['verify'].mean:.1f} ms")
    print(f"a trade with a proof: {t['trade-with-proof'].mean:.2f} ms, "
          f"without: {t['trade-baseline'].mean:.2f} ms, {report.trade_ratio:.1f}x")
    print(f"registering a product with encryption: {report.produce_ratio:.2f}x the plain cost")
    print()
    print(report.to_text(), end="")


if __name__ == "__main__":
    main()
