import json
import math

import numpy as np
import pytest

from wiretaplab.attack_noniter import expected_wrong_selected
from wiretaplab.channel import cascade
from wiretaplab.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main, parse_k_poly
from wiretaplab.errors import ConfigError, InvariantViolation
from wiretaplab.gf2lfsr import table_polynomial
from wiretaplab import harness
from wiretaplab.harness import (
    ATTACK1_COLUMNS,
    ExperimentConfig,
    attack1_csv,
    attack2_summary,
    config_checks,
    info_report,
    run_attack1_sweep,
    run_attack2_exit,
    simulate_pipeline,
)


def small_config(**kw):
    base = dict(poly=table_polynomial(11).hex, k=11, n=400, trials=3, seed=5, p_grid=[0.1])
    base.update(kw)
    return ExperimentConfig(**base)


class TestPipeline:
    def test_noiseless(self):
        s = simulate_pipeline(small_config(p1=0.0, p2=0.0), 0)
        assert np.array_equal(s.y, s.a) and np.array_equal(s.z, s.a)

    def test_decrypts(self):
        s = simulate_pipeline(small_config(p1=0.2, p2=0.1), 1)
        assert np.array_equal(s.cipher ^ s.m, s.z)

    def test_cascade_rate(self):
        cfg = small_config(n=10**5, p1=0.2, p2=0.1)
        s = simulate_pipeline(cfg, 0)
        rate = np.mean(s.a != s.y)
        p = cascade(0.2, 0.1)
        assert abs(rate - p) < 3 * math.sqrt(p * (1 - p) / 10**5)

    def test_depends_only_on_seed_and_trial(self):
        cfg = small_config(p1=0.2, p2=0.1)
        s1, s2 = simulate_pipeline(cfg, 2), simulate_pipeline(cfg, 2)
        assert np.array_equal(s1.y, s2.y) and s1.key == s2.key
        assert not np.array_equal(simulate_pipeline(cfg, 3).y, s1.y)


class TestConfig:
    def test_round_trip(self):
        cfg = small_config(p2=0.1, mode="realistic")
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg

    @pytest.mark.parametrize(
        "field,value",
        [("p1", 0.7), ("p2", -0.1), ("trials", 0), ("d", 0), ("alpha", 0), ("mode", "fast"),
         ("poly", "zz"), ("n", 5), ("max_rounds", -1), ("seed", -1)],
    )
    def test_validation_names_field(self, field, value):
        with pytest.raises(ConfigError) as exc:
            small_config(**{field: value})
        assert exc.value.field == field

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict({"bogus": 1})
        assert exc.value.field == "bogus"

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{not json")

    def test_hash_ignores_output_location(self):
        cfg = small_config()
        assert cfg.config_hash() == cfg.replace(out="elsewhere", workers=4).config_hash()
        assert cfg.config_hash() != cfg.replace(seed=6).config_hash()
        assert cfg.header() == f"config_hash={cfg.config_hash()} seed=5"


class TestAttack1Sweep:
    def test_noiseless_point(self):
        cfg = small_config(trials=5)
        (pt,) = run_attack1_sweep(cfg, [0.0])
        assert pt.median_trials == 1 and pt.success_rate == 1.0

    def test_estimate_column(self):
        cfg = small_config(trials=2, p_grid=[0.1, 0.3])
        points = run_attack1_sweep(cfg)
        for pt in points:
            assert pt.estimate == expected_wrong_selected(config_checks(cfg), pt.p_prime).trial_order
        lines = attack1_csv(cfg, points).splitlines()
        assert lines[0] == f"# {cfg.header()}"
        assert lines[1].split(",") == ATTACK1_COLUMNS
        assert len(lines) == 4


class TestAttack2Exit:
    def test_noiseless_single_trial(self):
        report = run_attack2_exit(small_config(trials=1, p1=0.0, p2=0.0))
        assert report.traces[0].converged and report.traces[0].rounds == 0
        assert report.chart.counts.sum() == 0

    def test_reproducible(self):
        cfg = small_config(p1=0.1, trials=3)
        s1 = attack2_summary(cfg, run_attack2_exit(cfg))
        s2 = attack2_summary(cfg, run_attack2_exit(cfg))
        assert s1 == s2
        assert s1["config_hash"] == cfg.config_hash() and s1["seed"] == 5

    def test_realistic_mode_estimates(self):
        report = run_attack2_exit(small_config(p1=0.1, trials=2, mode="realistic"))
        assert all(0 < p < 0.5 for p in report.attacker_p1)


class TestInfo:
    def test_values(self):
        rep = info_report(ExperimentConfig(p1=0.2, p2=0.1, p_m=0.1, p_w=0.2))
        assert rep["p_prime"] == pytest.approx(0.26)
        assert rep["secrecy_capacity"] > 0


class TestCli:
    def test_k_poly(self):
        assert parse_k_poly("15") == (table_polynomial(15).hex, 15)
        assert parse_k_poly("b:3") == ("b", 3)
        with pytest.raises(Exception):
            parse_k_poly("13:3")

    def test_info(self, capsys):
        assert main(["info", "--p1", "0.2", "--p2", "0.1"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["p_prime"] == pytest.approx(0.26)

    def test_config_error(self, capsys):
        assert main(["info", "--p1", "0.9"]) == EXIT_CONFIG
        assert "p1" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["info", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_selftest(self, capsys):
        assert main(["selftest"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") == 6 and "FAIL" not in out

    def test_invariant_exit_code(self, monkeypatch, tmp_path):
        def broken(*a, **k):
            raise InvariantViolation("boom")
        monkeypatch.setattr(harness, "simulate_pipeline", broken)
        code = main(["attack2-exit", "--k-poly", "11", "--n", "300", "--trials", "1", "--out", str(tmp_path)])
        assert code == EXIT_INVARIANT

    def test_attack1_writes_csv(self, tmp_path, capsys):
        code = main(["attack1-sweep", "--k-poly", "11", "--n", "300", "--trials", "2",
                     "--grid", "0.05,0.1", "--seed", "3", "--out", str(tmp_path)])
        assert code == EXIT_OK
        text = (tmp_path / "attack1_sweep.csv").read_text()
        assert text.startswith("# config_hash=") and len(text.splitlines()) == 4

    def test_attack2_writes_outputs(self, tmp_path):
        code = main(["attack2-exit", "--k-poly", "11", "--n", "300", "--trials", "2",
                     "--p1", "0.1", "--seed", "3", "--out", str(tmp_path)])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "attack2_summary.json").read_text())
        assert summary["seed"] == 3 and summary["trials"] == 2
        assert (tmp_path / "exit_chart.csv").read_text().splitlines()[1] == "bin_center,mean_extrinsic,count"
