import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

from privchain.cli import main
from privchain.ledger import Ledger
from privchain.scenario import ConfigError, ScenarioConfig, Workspace, parse_script, run_scenario
from privchain.zkrp import load_keys

DEMO = Path(__file__).resolve().parent.parent / "demos" / "vintage"


@pytest.fixture
def vintage(tmp_path):
    d = tmp_path / "vintage"
    shutil.copytree(DEMO, d)
    return d


@pytest.fixture
def config(vintage):
    return ScenarioConfig.load(vintage / "scenario.conf")


def body(transcript):
    return [ln for ln in transcript.splitlines() if not ln.startswith("#")]


class TestRunScenario:
    def test_demo_script(self, config, vintage):
        status, transcript = run_scenario(config, (vintage / "wine-bottle.script").read_text())
        assert status == 0
        assert 'regions=["Barossa", "Barossa", "Eden Valley"]' in transcript
        assert "REJECTED" not in transcript and "UNEXPECTED-SUCCESS" not in transcript
        lot4 = next(ln for ln in body(transcript) if " trade ok id=lot-4 " in ln)
        assert 'region="not verified"' in lot4 and "req_pay=none" in lot4
        lot5 = next(ln for ln in body(transcript) if " trade ok id=lot-5 " in ln)
        assert 'region="proof not provided"' in lot5
        assert transcript.splitlines()[-1].startswith("# exit=0 ")

    def test_reproducible(self, config, vintage):
        script = (vintage / "wine-bottle.script").read_text()
        assert run_scenario(config, script)[1] == run_scenario(config, script)[1]

    def test_seed_changes_transcript(self, vintage):
        script = "create a hill-farm --no-proof\n"
        a = run_scenario(ScenarioConfig.load(vintage / "scenario.conf"), script)[1]
        text = (vintage / "scenario.conf").read_text().replace("batch_size = 1", "batch_size = 2")
        (vintage / "b.conf").write_text(text)
        b = run_scenario(ScenarioConfig.load(vintage / "b.conf"), script)[1]
        assert body(a) == body(b) and a != b

    def test_happy_path(self, config):
        script = "\n".join([
            "create g1 hill-farm --at -34.530 138.960 --region Barossa --device gps-17",
            "create g2 creek-farm --no-proof",
            "create g3 ridge-farm --at -34.600 139.100 --region 'Eden Valley' --device gps-42",
            "trade g1 winery --incentive 5",
            "trade g2 winery",
            "trade g3 winery --incentive 5",
            "produce fp winery g1 g2 g3",
            "query fp",
        ])
        status, transcript = run_scenario(config, script)
        assert status == 0
        assert 'regions=["Barossa", "proof not provided", "Eden Valley"]' in transcript

    def test_double_trade_expect_fail(self, config):
        script = "create g1 hill-farm --no-proof\ntrade g1 winery\nexpect-fail trade g1 cellar-door\n"
        status, transcript = run_scenario(config, script)
        assert status == 0 and "3 trade rejected-as-expected" in transcript

    def test_unexpected_outcomes_fail_the_run(self, config):
        status, transcript = run_scenario(config, "create g1 hill-farm --no-proof\ntrade g1 winery\ntrade g1 winery\n")
        assert status == 2 and "3 trade REJECTED" in transcript
        status, transcript = run_scenario(config, "expect-fail create g1 hill-farm --no-proof\n")
        assert status == 2 and "UNEXPECTED-SUCCESS" in transcript

    def test_wrong_roles_are_rejections(self, config):
        status, transcript = run_scenario(config, "expect-fail create g1 winery --no-proof\n"
                                                  "expect-fail trade nope winery\n")
        assert status == 0

    @pytest.mark.parametrize("script,line", [
        ("settle\nfly away\n", 2),
        ("create g1\n", 1),
        ("\n\ncreate g1 hill-farm --region Barossa\n", 3),
        ("trade g1 winery --incentive ten\n", 1),
        ("query 'unterminated\n", 1),
    ])
    def test_parse_errors(self, script, line):
        with pytest.raises(ConfigError, match=f"^s.txt:{line}: "):
            parse_script(script, "s.txt")


class TestConfig:
    def test_demo_values(self, config, vintage):
        assert (config.base_u, config.max_digits_l, config.batch_size, config.seed) == (10, 8, 1, "vintage-2021")
        assert config.registry_path == vintage / "regions.csv"

    @pytest.mark.parametrize("line,needle", [
        ("colour = red", "expected one of"),
        ("base_u = ten", "integer"),
        ("roster = nowhere.txt", "does not exist"),
        ("just words", "expected one of"),
    ])
    def test_errors_name_the_line(self, vintage, line, needle):
        (vintage / "c.conf").write_text("# x\n" + line + "\n")
        with pytest.raises(ConfigError, match=f"c.conf:2: .*{needle}"):
            ScenarioConfig.load(vintage / "c.conf")

    def test_missing(self, vintage):
        (vintage / "c.conf").write_text("registry = regions.csv\n")
        with pytest.raises(ConfigError, match="missing"):
            ScenarioConfig.load(vintage / "c.conf")
        with pytest.raises(ConfigError):
            ScenarioConfig.load(vintage / "absent.conf")

    def test_roster_must_match_seed(self, vintage):
        text = (vintage / "scenario.conf").read_text().replace("vintage-2021", "other-seed")
        (vintage / "c.conf").write_text(text)
        with pytest.raises(ConfigError, match="does not match the seed"):
            Workspace(ScenarioConfig.load(vintage / "c.conf"))

    def test_bad_parameters(self, vintage):
        text = (vintage / "scenario.conf").read_text().replace("base_u     = 10", "base_u = 1")
        (vintage / "c.conf").write_text(text)
        with pytest.raises(ConfigError, match="zkrp"):
            Workspace(ScenarioConfig.load(vintage / "c.conf"))


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCli:
    def test_full_flow(self, capsys, vintage, tmp_path):
        state = tmp_path / "state"
        s = ("--state", state)
        code, out, _ = cli(capsys, "setup", vintage / "scenario.conf", *s)
        assert code == 0 and out.startswith("setup u=10 l=8 regions=4 participants=12")

        assert cli(capsys, "create", "lot-1", "hill-farm", "--at", "-34.530", "138.960",
                   "--region", "Barossa", "--device", "gps-17", *s)[0] == 0
        assert cli(capsys, "create", "lot-2", "creek-farm", "--at", "-34.512", "138.978",
                   "--region", "Barossa", "--device", "gps-17", *s)[0] == 0
        assert cli(capsys, "create", "lot-3", "coast-farm", "--no-proof", *s)[0] == 0
        code, out, _ = cli(capsys, "trade", "lot-1", "winery", "--incentive", 120, *s)
        assert code == 0 and "region=Barossa" in out
        code, out, _ = cli(capsys, "trade", "lot-2", "winery", "--incentive", 80, "--buyer-amount", 70, *s)
        assert code == 0
        assert cli(capsys, "trade", "lot-3", "winery", *s)[0] == 0
        code, _, err = cli(capsys, "trade", "lot-1", "cellar-door", *s)
        assert code == 2 and "AlreadyTraded" in err

        code, out, _ = cli(capsys, "bank-run", *s)
        assert code == 0
        assert "status=Paid amount=120 seller=hill-farm" in out and "status=Disputed" in out
        assert "balance hill-farm=120" in out
        # a second pass finds nothing new
        code, out, _ = cli(capsys, "bank-run", *s)
        assert out.strip() == "balance hill-farm=120"

        assert cli(capsys, "resolve", "lot-2", *s)[0] == 0
        code, out, _ = cli(capsys, "bank-run", *s)
        assert "status=Paid amount=80 seller=creek-farm" in out
        assert cli(capsys, "resolve", "lot-2", *s)[0] == 2

        assert cli(capsys, "produce", "bottle-1", "winery", "lot-1", "lot-2", "lot-3", *s)[0] == 0
        code, out, _ = cli(capsys, "query", "bottle-1", *s)
        assert code == 0 and out == "Barossa\nBarossa\nproof not provided\n"
        # nothing identifying in what a consumer sees
        roster = (vintage / "roster.txt").read_text()
        for token in ["lot-1", "lot-2", "lot-3", "hill-farm", "winery"] + [
                ln.split()[2] for ln in roster.splitlines() if ln and not ln.startswith("#")]:
            assert token not in out
        code, out, _ = cli(capsys, "query", "bottle-9", *s)
        assert code == 2

        code, out, _ = cli(capsys, "audit", "bottle-1", *s)
        assert code == 0 and out.count("commodity=") == 3 and "commodity=lot-1 " in out
        assert cli(capsys, "sale", "bottle-1", "winery", *s)[0] == 0
        assert cli(capsys, "sale", "bottle-1", "winery", *s)[0] == 2

        # the persisted ledger re-verifies and the proofs are on disk
        keys = load_keys(state / "zkrp-keys.json")
        cfg = ScenarioConfig.load(vintage / "scenario.conf")
        ws = Workspace(cfg, state_dir=state, keys=keys)
        assert ws.ledger.consumer_query("bottle-1") == ["Barossa", "Barossa", "proof not provided"]
        assert len(list((state / "proofs").iterdir())) == 2

    def test_separate_invocations_do_not_reuse_randomness(self, capsys, vintage, tmp_path):
        s = ("--state", tmp_path / "st")
        cli(capsys, "setup", vintage / "scenario.conf", *s)
        for cid in ("a", "b"):
            cli(capsys, "create", cid, "hill-farm", "--at", "-34.530", "138.960",
                "--region", "Barossa", "--device", "gps-17", *s)
        proofs = [p.read_bytes() for p in (tmp_path / "st" / "proofs").iterdir()]
        assert len(proofs) == 2
        # same reading location, but fresh commitments and proofs
        assert proofs[0][:60] != proofs[1][:60]

    def test_config_errors(self, capsys, vintage, tmp_path):
        code, _, err = cli(capsys, "setup", tmp_path / "missing.conf", "--state", tmp_path / "s")
        assert code == 3 and "missing.conf" in err
        code, _, err = cli(capsys, "query", "x", "--state", tmp_path / "nothing")
        assert code == 3 and "not a state directory" in err
        code, _, err = cli(capsys, "run", vintage / "scenario.conf", tmp_path / "none.script")
        assert code == 3
        (tmp_path / "bad.script").write_text("settle\nfrobnicate\n")
        code, _, err = cli(capsys, "run", vintage / "scenario.conf", tmp_path / "bad.script")
        assert code == 3 and "bad.script:2:" in err
        code, _, err = cli(capsys, "register-roster", "--seed", "x", "seller")
        assert code == 3

    def test_tampered_ledger_is_a_config_error(self, capsys, vintage, tmp_path):
        s = ("--state", tmp_path / "st")
        cli(capsys, "setup", vintage / "scenario.conf", *s)
        cli(capsys, "create", "a", "hill-farm", "--no-proof", *s)
        path = tmp_path / "st" / "ledger.jsonl"
        path.write_text(path.read_text().replace('"a"', '"b"'))
        code, _, err = cli(capsys, "query", "x", *s)
        assert code == 3 and "hash mismatch" in err

    def test_run_and_out(self, capsys, vintage, tmp_path):
        code, out, _ = cli(capsys, "run", vintage / "scenario.conf", vintage / "wine-bottle.script")
        assert code == 0 and "# exit=0" in out
        code, out, _ = cli(capsys, "run", vintage / "scenario.conf", vintage / "wine-bottle.script",
                           "--out", tmp_path / "t.txt")
        assert out == "" and (tmp_path / "t.txt").read_text().startswith("# seed=vintage-2021")
        (tmp_path / "f.script").write_text("create a hill-farm --no-proof\ncreate a hill-farm --no-proof\n")
        assert cli(capsys, "run", vintage / "scenario.conf", tmp_path / "f.script")[0] == 2

    def test_register_roster_matches_demo(self, capsys, vintage):
        lines = [ln for ln in (vintage / "roster.txt").read_text().splitlines()
                 if ln and not ln.startswith("#")]
        entries = [f"{ln.split()[0]}:{ln.split()[1]}" for ln in lines]
        code, out, _ = cli(capsys, "register-roster", "--seed", "vintage-2021", *entries)
        assert code == 0 and out.splitlines() == lines


def test_bank_as_separate_process(capsys, vintage, tmp_path):
    """bank-run follows the event file from another OS process."""
    state = tmp_path / "st"
    s = ("--state", state)
    cli(capsys, "setup", vintage / "scenario.conf", *s)
    bank = subprocess.Popen(
        [sys.executable, "-m", "privchain", "bank-run", "--follow", "--interval", "0.1",
         "--max-idle", "40", "--state", str(state)],
        stdout=subprocess.PIPE, text=True)
    try:
        for i, farm in enumerate(["hill-farm", "creek-farm"]):
            cli(capsys, "create", f"g{i}", farm, "--at", "-34.530", "138.960", "--region", "Barossa",
                "--device", "gps-17", *s)
            cli(capsys, "trade", f"g{i}", "winery", "--incentive", 10 + i, *s)
            time.sleep(0.2)
        out, _ = bank.communicate(timeout=120)
    finally:
        bank.kill()
    assert bank.returncode == 0
    assert "amount=10 seller=hill-farm" in out and "amount=11 seller=creek-farm" in out
    cfg = ScenarioConfig.load(vintage / "scenario.conf")
    ledger = Ledger.load(state / "ledger.jsonl", *(lambda w: (w.vk, w.registry, w.roster))(
        Workspace(cfg, keys=load_keys(state / "zkrp-keys.json"))))
    assert [ledger.payment_status(r)[-1].value for r in ledger.emitted_req_pays()] == ["Paid", "Paid"]
