import json
import math
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from seqescape.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from seqescape.commands import cmd_ensemble, cmd_violin_data, read_escapes
from seqescape.config import ConfigError, load_config, parse_config
from seqescape.output import read_csv

QUICK = """
[network]
topology = two_node_bidirectional
beta_sweep = 0.0, 0.03

[simulation]
alpha = 0.04
t_max = 1e5
n_realizations = 12
master_seed = 5

[output]
directory = {out}
"""


def write_cfg(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text).format(out=tmp_path / "out"))
    return path


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("[network]\ntopology = two_node_bidirectional\n")
        assert cfg.n_units == 2 and cfg.betas == (0.0,)
        assert cfg.nu == 0.01 and (cfg.x_c, cfg.sigma) == (0.5, 0.1)
        s = cfg.sim
        assert (s.alpha, s.dt, s.h_threshold, s.t_max, s.n_realizations) == (0.02, 1e-3, 0.8, 1e6, 1000)
        assert cfg.stats_pairs == ((1, 0), (2, 1))

    def test_sweep(self):
        cfg = parse_config("[network]\ntopology = two_node_bidirectional\n"
                           "beta_sweep = 0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03\n")
        assert len(cfg.networks()) == 7
        assert cfg.networks()[-1].beta == 0.03

    def test_chain(self):
        cfg = parse_config("[network]\ntopology = chain_unidirectional\nn_units = 3\nbeta = 0.03\n")
        assert cfg.network(0.03).in_neighbors == ((1,), (2,), ())
        assert cfg.stats_pairs == ((1, 0), (2, 1), (3, 2))

    def test_round_trip(self):
        cfg = parse_config("[network]\ntopology = chain_unidirectional\nn_units = 3\nbeta = 0.02\n"
                           "[analysis]\nbin_width = 50\n[deterministic]\nsaddle = QQS\n")
        again = parse_config(cfg.to_ini())
        assert again == cfg
        assert again.to_ini() == cfg.to_ini()

    @pytest.mark.parametrize("text, where", [
        ("[network]\ntopology = two_node_bidirectional\n[simulation]\nh_threshold = 0.05\n", "h_threshold"),
        ("[network]\ntopology = two_node_bidirectional\n[simulation]\nh_threshold = 1.2\n", "h_threshold"),
        ("[network]\ntopology = ring\n", "topology"),
        ("[network]\nbeta = 0.01\n", "topology"),
        ("[network]\ntopology = two_node_bidirectional\nbeta = 0.1\nbeta_sweep = 0, 0.1\n", "beta"),
        ("[network]\ntopology = two_node_bidirectional\nbeta_sweep = 0.02, 0.01\n", "beta_sweep"),
        ("[network]\ntopology = two_node_bidirectional\nbeta = -0.1\n", "beta_sweep"),
        ("[network]\ntopology = two_node_bidirectional\nnu = 2\n", "nu"),
        ("[network]\ntopology = two_node_bidirectional\nalpha = 0.02\n", "alpha"),
        ("[network]\ntopology = two_node_bidirectional\n[extras]\nx = 1\n", "extras"),
        ("[network]\ntopology = chain_unidirectional\n", "n_units"),
        ("[network]\ntopology = two_node_bidirectional\n[simulation]\ndt = fast\n", "dt"),
        ("[network]\ntopology = two_node_bidirectional\n[analysis]\nstats_pairs = 3|1\n", "stats_pairs"),
    ])
    def test_rejected(self, text, where):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert where in str(info.value)

    def test_parse_error_has_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("[network]\ntopology = single\nthis line is not ini\n", "bad.ini")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.ini")


class TestCli:
    def test_config_error_exit_code(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "[network]\ntopology = two_node_bidirectional\n"
                                   "[simulation]\nh_threshold = 0.05\n")
        assert main(["ensemble", "--config", str(path)]) == EXIT_CONFIG
        assert "h_threshold" in capsys.readouterr().err

    def test_bad_seed_is_config_error(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        assert main(["ensemble", "--config", str(path), "--seed", "-3"]) == EXIT_CONFIG

    def test_invalid_bracket_exit_code(self, tmp_path, capsys):
        path = write_cfg(tmp_path, QUICK)
        rc = main(["saddle-connection", "--config", str(path), "--bracket", "0.03", "0.04"])
        assert rc == EXIT_RUNTIME
        assert "bracket" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        out = subprocess.run([sys.executable, "-m", "seqescape", "equilibria", "--config", str(path)],
                             capture_output=True, text=True)
        assert out.returncode == EXIT_OK, out.stderr
        rows = read_csv(tmp_path / "out" / "equilibria.csv")
        assert sum(r["beta"] == "0.0" for r in rows) == 9

    def test_ensemble_outputs_and_determinism(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["ensemble", "--config", str(path), "--out", str(first)]) == EXIT_OK
        assert main(["ensemble", "--config", str(path), "--out", str(second), "--workers", "2"]) == EXIT_OK
        names = ["escapes.csv", "summary.csv", "histograms.csv", "sequences.csv", "mixture.csv"]
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        a = json.loads((first / "summary.json").read_text())
        b = json.loads((second / "summary.json").read_text())
        a["provenance"].pop("config"), b["provenance"].pop("config")
        assert a == b
        manifest = json.loads((first / "provenance_ensemble.json").read_text())
        assert set(manifest["files"]) == set(names) | {"summary.json"}
        assert manifest["master_seed"] == 5 and "created" in manifest

    def test_escapes_round_trip(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, QUICK))
        bundle = cmd_ensemble(cfg)
        back = read_escapes(bundle.directory / "escapes.csv")
        for beta, recs in bundle.data["records"].items():
            for r, s in zip(recs, back[beta], strict=True):
                np.testing.assert_array_equal(r.tau_node, s.tau_node)
                assert r.sequence == s.sequence and r.classification == s.classification

    def test_summary_values(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, QUICK))
        bundle = cmd_ensemble(cfg)
        rows = read_csv(bundle.directory / "summary.csv")
        assert len(rows) == 4
        for row in rows:
            assert float(row["cv"]) == pytest.approx(float(row["sd"]) / float(row["mean"]), rel=1e-15)
        hist = read_csv(bundle.directory / "histograms.csv")
        per_group = {}
        for h in hist:
            per_group.setdefault((h["beta"], h["k"], h["l"]), []).append(h)
        for rows in per_group.values():
            assert len(rows) == 21 and rows[-1]["bin_hi"] == "inf" and rows[-1]["count"] == "0"
            assert sum(int(h["count"]) for h in rows) == 12

    def test_seed_override_changes_output(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        main(["ensemble", "--config", str(path), "--out", str(tmp_path / "a")])
        main(["ensemble", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "6"])
        assert (tmp_path / "a" / "escapes.csv").read_bytes() != (tmp_path / "b" / "escapes.csv").read_bytes()

    def test_chain_sequences(self, tmp_path):
        path = write_cfg(tmp_path, QUICK.replace("two_node_bidirectional", "chain_unidirectional\nn_units = 3")
                         .replace("beta_sweep = 0.0, 0.03", "beta = 0.03"))
        assert main(["ensemble", "--config", str(path)]) == EXIT_OK
        rows = read_csv(tmp_path / "out" / "sequences.csv")
        assert len(rows) == 6
        assert math.fsum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-12)
        assert {r["sequence"] for r in rows} >= {"2-1-0", "0-1-2"}

    def test_violin_data(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        assert main(["ensemble", "--config", str(path)]) == EXIT_OK
        assert main(["violin-data", "--config", str(path)]) == EXIT_OK
        groups = json.loads((tmp_path / "out" / "violin.json").read_text())["groups"]
        assert len(groups) == 4
        for g in groups:
            assert g["samples"] == sorted(g["samples"]) and len(g["samples"]) == g["n"]
            assert g["mean_plus_sd"] == pytest.approx(g["mean"] + g["sd"], rel=1e-15)
            assert g["mean"] == pytest.approx(np.mean(g["samples"]), rel=1e-12)

    def test_violin_needs_two_samples(self, tmp_path):
        path = write_cfg(tmp_path, QUICK.replace("n_realizations = 12", "n_realizations = 1"))
        assert main(["violin-data", "--config", str(path)]) == EXIT_RUNTIME
        with pytest.raises(ValueError, match="at least 2"):
            cmd_violin_data(load_config(path))

    def test_phase_portrait(self, tmp_path):
        path = write_cfg(tmp_path, QUICK + "\n[deterministic]\nsample_paths = 1\n")
        assert main(["phase-portrait", "--config", str(path)]) == EXIT_OK
        out = tmp_path / "out"
        eq = read_csv(out / "phase_equilibria.csv")
        assert sum(r["beta"] == "0.0" for r in eq) == 9
        man = read_csv(out / "manifolds.csv")
        landing = {(r["beta"], r["saddle"], r["direction"]): r["landing"] for r in man}
        assert landing[("0.0", "QS", "1")] == "QA"
        assert landing[("0.03", "QS", "1")] == "AA"
        assert len(read_csv(out / "potential_grid.csv")) == 101 * 101
        assert read_csv(out / "sample_paths.csv")

    def test_phase_portrait_needs_two_nodes(self, tmp_path):
        path = write_cfg(tmp_path, QUICK.replace("two_node_bidirectional", "single"))
        assert main(["phase-portrait", "--config", str(path)]) == EXIT_RUNTIME

    def test_saddle_connection_report(self, tmp_path):
        path = write_cfg(tmp_path, QUICK)
        assert main(["saddle-connection", "--config", str(path), "--tol", "1e-4"]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "saddle_connection.json").read_text())["result"]
        assert rep["mu"] == pytest.approx(0.12, abs=1e-12)
        assert 0.024 <= rep["beta_sc"] <= 0.025
        assert rep["bracket_final"][1] - rep["bracket_final"][0] <= 1e-4
        assert rep["landing_below"] == "QA" and rep["landing_above"] == "AA"
