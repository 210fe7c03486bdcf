import pytest

from privchain.bench import PHASES, BenchReport, Timing, bench


def report(**means):
    base = dict.fromkeys(PHASES, 1.0)
    base.update(means)
    r = BenchReport(10, 8, 10, 600, 3)
    r.timings = {k: Timing((v * 0.9, v * 1.1)) for k, v in base.items()}
    return r


def test_timing_stats():
    t = Timing((1.0, 2.0, 3.0))
    assert (t.trials, t.mean, t.stdev) == (3, 2.0, 1.0)
    assert t.cv == 0.5
    assert Timing((4.0,)).stdev == 0.0


def test_checks():
    ok = report(**{"trade-with-proof": 20.0, "trade-baseline": 1.0})
    assert ok.ok and ok.trade_ratio == pytest.approx(20.0)
    slow = report(**{"trade-with-proof": 60.0, "trade-baseline": 1.0})
    assert not slow.ok
    equal = report()
    assert not equal.ok  # proof path must be strictly slower
    produce = report(**{"trade-with-proof": 5.0, "produce-with-encryption": 3.5})
    assert [c[1] for c in produce.checks()] == [True, True, False, True, True]
    setup = report(**{"trade-with-proof": 5.0, "setup": 10_001.0})
    assert not setup.ok


def test_text_format():
    text = report(**{"trade-with-proof": 5.0}).to_text()
    lines = text.splitlines()
    assert lines[0] == "bench u=10 l=8 trials=10 region_cells=600 digits_per_bound=3"
    assert [ln.split()[0] for ln in lines[1:8]] == [f"phase={p}" for p in PHASES]
    assert lines[8] == "ratio trade=5.00 produce=1.00"
    assert all(ln.startswith("check PASS ") for ln in lines[9:])


def test_minimum_trials():
    with pytest.raises(ValueError):
        bench(trials=9)


def test_small_run(tmp_path):
    r = bench(trials=10, region_cells=50, base_u=4, max_digits_l=6, workdir=tmp_path, fsync=False)
    assert r.digits == 3
    assert r.timings["setup"].trials == 1
    assert all(r.timings[p].trials == 10 for p in PHASES if p != "setup")
    assert r.timings["trade-with-proof"].mean > r.timings["trade-baseline"].mean
    assert list(tmp_path.iterdir()) == []
