import json

import numpy as np
import pytest

from mehlerlab.cli import main


def run(args):
    return main(args)


class TestHypothesesCommand:
    def test_koponen_defaults_pass(self, tmp_path):
        code = run(["hypotheses", "--model", "koponen",
                    "--out", str(tmp_path)])
        assert code == 0
        text = (tmp_path / "hypotheses.csv").read_text()
        assert "stability" in text and "domination" in text
        assert "fail" not in text.split("\n")[0]

    def test_unstable_generator_fails(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "model": "koponen",
            "model_params": {"beta": 1.0},
        }))
        # no way to make koponen unstable through its parameters, so check
        # the exit path indirectly: a failing clause must flip the code
        from mehlerlab.cli import cmd_hypotheses
        from mehlerlab.models import build_koponen
        import mehlerlab.cli as cli_mod

        class Unstable:
            pass

        spec = build_koponen()
        import dataclasses
        from mehlerlab.levy import EvolvedTriple, SemigroupFamily
        ev = EvolvedTriple(spec.evolved.triple,
                           SemigroupFamily([[0.0]]))
        broken = dataclasses.replace(spec, evolved=ev)
        orig = cli_mod.model_from_config
        cli_mod.model_from_config = lambda *a, **k: broken
        try:
            code = cmd_hypotheses({"model": "koponen",
                                   "out_dir": str(tmp_path)})
        finally:
            cli_mod.model_from_config = orig
        assert code == 1
        assert "fail" in (tmp_path / "hypotheses.csv").read_text()

    def test_malformed_config_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["hypotheses", "--config", str(bad)]) == 2

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "koponen", "bogus": 1}))
        assert run(["hypotheses", "--config", str(cfg)]) == 2

    def test_unknown_model_rejected(self, tmp_path):
        # argparse restricts --model choices, so route through the config
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"model": "mystery", "seed": 1}))
        assert run(["verify", "--config", str(cfg)]) == 2


class TestSampleCommand:
    def test_zero_draws_header_only(self, tmp_path):
        code = run(["sample", "--model", "koponen", "--samples", "0",
                    "--seed", "1", "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "samples.csv").read_text().strip().split("\n")
        assert lines == ["x1"]

    def test_fixed_seed_reproducible(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        for d in (a_dir, b_dir):
            code = run(["sample", "--model", "koponen", "--samples", "500",
                        "--seed", "9", "--out", str(d)])
            assert code == 0
        assert (a_dir / "samples.csv").read_bytes() == \
            (b_dir / "samples.csv").read_bytes()

    def test_marginal_method(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "model": "koponen", "samples": 200, "seed": 3,
            "sample_method": "marginal", "sample_time": 0.5,
            "out_dir": str(tmp_path)}))
        assert run(["sample", "--config", str(cfg)]) == 0
        lines = (tmp_path / "samples.csv").read_text().strip().split("\n")
        assert len(lines) == 201


class TestVerifyCommand:
    def test_seed_required(self, tmp_path):
        assert run(["verify", "--model", "koponen",
                    "--out", str(tmp_path)]) == 2

    def test_single_suite_restriction(self, tmp_path):
        code = run(["verify", "--model", "koponen", "--suite", "poincare",
                    "--seed", "5", "--samples", "4000",
                    "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "verify.csv").read_text().strip().split("\n")
        header, body = rows[0], rows[1:]
        assert all("poincare" in r for r in body)
        assert len(body) >= 10
        assert (tmp_path / "verify.json").exists()

    def test_unknown_suite_exit_2(self, tmp_path):
        assert run(["verify", "--model", "koponen", "--suite", "bogus",
                    "--seed", "5", "--out", str(tmp_path)]) == 2

    def test_byte_identical_reruns_and_chains(self, tmp_path):
        outs = []
        for sub, chains in [("r1", "1"), ("r2", "1"), ("r4", "4")]:
            d = tmp_path / sub
            code = run(["verify", "--model", "koponen",
                        "--suite", "poincare,moment_transfer",
                        "--seed", "11", "--samples", "6000",
                        "--chains", chains, "--out", str(d)])
            assert code == 0
            outs.append((d / "verify.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_rows_carry_seed_and_n(self, tmp_path):
        run(["verify", "--model", "koponen", "--suite", "moment_transfer",
             "--seed", "21", "--samples", "2000", "--out", str(tmp_path)])
        rows = (tmp_path / "verify.csv").read_text().strip().split("\n")
        assert "seed" in rows[0] and "N" in rows[0]
        assert ",21," in rows[1] and ",2000," in rows[1]
