"""Config validation, dispatch, artifacts, and determinism of the CLI.

The error-collection tests assert that every problem in a config is
reported in one pass with its invariant named; the dispatch tests run
each subcommand on a small instance and check the JSON/CSV artifacts,
including byte-identical reruns for the stochastic ones.
"""

import json
import math

import pytest

from dilutefermi.cli import ConfigError, main, parse_config, run


def _json(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


class TestParseConfig:
    def test_minimal_scatter(self):
        config = parse_config(
            'subcommand = "scatter"\n'
            '[potential]\nkind = "hard_core"\nradius = 1.0\n')
        assert config.subcommand == "scatter"
        assert config.parameters["potential"].hard_core == 1.0
        assert config.seed == 0 and config.threads == 1

    def test_negative_density_names_invariant(self):
        with pytest.raises(ConfigError) as err:
            parse_config('subcommand = "energy"\n[energy]\nrho = -1.0\n')
        assert any("rho > 0" in m for m in err.value.errors)

    def test_ramp_below_range_cites_jastrow_invariant(self):
        text = (
            'subcommand = "vmc"\n'
            '[potential]\nkind = "square"\nheight = 2.0\nradius = 1.0\n'
            '[vmc]\nn_up = 2\nn_down = 2\nside = 8.0\nsteps = 10\n'
            'ramp_end = 0.5\n')
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert any("s > R0" in m for m in err.value.errors)

    def test_collects_every_error(self):
        text = (
            'subcommand = "energy"\nseed = -1\nmystery = 3\n'
            '[energy]\nrho = -0.5\nq = 0\nlhy = true\nbogus = 2\n')
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        messages = "\n".join(err.value.errors)
        assert len(err.value.errors) >= 5
        for fragment in ("mystery", "seed", "rho > 0", "q >= 1", "bogus",
                         "lhy"):
            assert fragment in messages

    def test_syntax_error_reports_line(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("rho = = 1\n")

    def test_subcommand_mismatch(self):
        with pytest.raises(ConfigError, match="command line"):
            parse_config('subcommand = "energy"\n', subcommand="scatter")

    def test_unknown_subcommand(self):
        with pytest.raises(ConfigError, match="expected one of"):
            parse_config('subcommand = "frobnicate"\n')

    def test_potential_file_reference(self, tmp_path):
        (tmp_path / "core.toml").write_text(
            '[potential]\nkind = "hard_core"\nradius = 0.5\n')
        config = parse_config(
            'subcommand = "scatter"\npotential_file = "core.toml"\n',
            base_dir=tmp_path)
        assert config.parameters["potential"].hard_core == 0.5

    def test_potential_sources_are_exclusive(self, tmp_path):
        text = ('subcommand = "scatter"\npotential_file = "x.toml"\n'
                '[potential]\nkind = "none"\n')
        with pytest.raises(ConfigError, match="not both"):
            parse_config(text, base_dir=tmp_path)

    def test_missing_potential_file(self, tmp_path):
        with pytest.raises(ConfigError, match="potential_file"):
            parse_config('subcommand = "scatter"\n'
                         'potential_file = "absent.toml"\n',
                         base_dir=tmp_path)

    def test_overrides_replace_file_values(self):
        config = parse_config(
            'subcommand = "scatter"\nseed = 1\n[potential]\nkind = "none"\n'
            'hard_core_radius = 1.0\n',
            overrides={"seed": 9, "output": "elsewhere"})
        assert config.seed == 9
        assert config.output.name == "elsewhere"

    def test_vmc_defaults_seed_list_and_density_box(self):
        text = ('subcommand = "vmc"\nseed = 4\n[potential]\nkind = "none"\n'
                '[vmc]\nn_up = 2\nn_down = 2\nrho = 0.004\nsteps = 10\n')
        config = parse_config(text)
        assert config.parameters["seeds"] == [4]
        assert config.parameters["side"] == pytest.approx(10.0)

    def test_vmc_requires_exactly_one_box_size(self):
        base = ('subcommand = "vmc"\n[potential]\nkind = "none"\n'
                '[vmc]\nn_up = 2\nn_down = 2\nsteps = 10\n')
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(base)
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(base + "side = 8.0\nrho = 0.01\n")


class TestScatter:
    def test_hard_core_report(self, tmp_path, capsys):
        (tmp_path / "c.toml").write_text(
            '[potential]\nkind = "hard_core"\nradius = 1.0\n'
            '[scatter]\npair_cutoff = 10.0\n')
        assert main(["scatter", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        record = _json(tmp_path, "scatter.json")
        assert record["schema_version"] == 1
        assert record["units"]["convention"] == "hbar = 2m = 1"
        result = record["result"]
        assert result["scattering_length"] == pytest.approx(1.0, abs=1e-8)
        assert result["pair"]["pair_energy"] == pytest.approx(
            4.0 * math.pi / 0.9, rel=1e-10)
        assert "a_v" in capsys.readouterr().out


class TestEnergy:
    def test_single_species_has_no_interaction(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            '[energy]\nrho = 0.01\nq = 1\nscattering_length = 0.5\n')
        assert main(["energy", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        result = _json(tmp_path, "energy.json")["result"]
        assert result["interaction_term"] == 0.0
        rows = (tmp_path / "energy.csv").read_text().splitlines()
        assert rows[0].startswith("branch,rho,q")
        assert len(rows) == 2

    def test_bose_branch(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            '[energy]\nrho = 0.001\nscattering_length = 0.1\n'
            'bose = true\nlhy = true\n')
        assert main(["energy", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        result = _json(tmp_path, "energy.json")["result"]
        assert result["branch"] == "bose"
        assert result["lhy_term"] > 0.0


class TestDysonCheck:
    def test_radial_certification(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            '[potential]\nkind = "square"\nheight = 2.0\nradius = 1.0\n'
            '[dyson-check]\nmode = "radial"\nshell_inner = 2.5\n'
            'shell_outer = 5.0\nl_max = 1\n')
        assert main(["dyson-check", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        result = _json(tmp_path, "dyson-check.json")["result"]
        assert result["certified"] is True
        assert len(result["channels"]) == 2
        rows = (tmp_path / "gap_table.csv").read_text().splitlines()
        assert rows[0] == "channel_l,min_eigenvalue"
        assert len(rows) == 3


class TestSlaterCheck:
    def test_oracles_and_scan(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            'seed = 2\n[slater-check]\nside = 6.0\norbital_count = 2\n'
            'centers = 2\nseparation = 0.8\nratios = [5, 10]\n'
            'cutoff = 0.4\nquadrature_points = 16\n')
        assert main(["slater-check", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        result = _json(tmp_path, "slater-check.json")["result"]
        assert result["passed"] is True
        assert result["scan"]["strictly_decreasing"] is True
        names = [o["name"] for o in result["oracles"]]
        assert "norm_vs_permutation_sum_n4" in names
        rows = (tmp_path / "key_estimate.csv").read_text().splitlines()
        assert rows[0] == "ratio,scattering_length,deviation_norm"
        assert len(rows) == 3


class TestVmc:
    def test_free_run_matches_filling_and_reruns_identically(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            'seed = 3\n[potential]\nkind = "none"\n'
            '[vmc]\nn_up = 2\nn_down = 2\nside = 6.0\nsteps = 200\n')
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert main(["vmc", str(tmp_path / "c.toml"),
                     "--out", str(first)]) == 0
        assert main(["vmc", str(tmp_path / "c.toml"),
                     "--out", str(second)]) == 0
        assert (first / "vmc.json").read_bytes() == \
            (second / "vmc.json").read_bytes()
        assert (first / "block_means.csv").read_bytes() == \
            (second / "block_means.csv").read_bytes()
        result = _json(first, "vmc.json")["result"]
        assert result["energy"] == pytest.approx(result["e0_finite"],
                                                 rel=1e-12)
        assert result["error"] < 1e-12
        assert result["warnings"]  # 2 per species is an open shell

    def test_seed_flag_overrides_config(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            'seed = 3\n[potential]\nkind = "none"\n'
            '[vmc]\nn_up = 1\nn_down = 0\nside = 5.0\nsteps = 160\n')
        assert main(["vmc", str(tmp_path / "c.toml"), "--seed", "11",
                     "--out", str(tmp_path)]) == 0
        record = _json(tmp_path, "vmc.json")
        assert record["seed"] == 11
        assert record["result"]["runs"][0]["seed"] == 11


class TestExitCodes:
    def test_bad_config_exits_two(self, tmp_path, capsys):
        (tmp_path / "c.toml").write_text('[energy]\nrho = -1.0\n')
        assert main(["energy", str(tmp_path / "c.toml")]) == 2
        assert "rho > 0" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path, capsys):
        assert main(["energy", str(tmp_path / "nope.toml")]) == 2
        assert "config" in capsys.readouterr().err

    def test_computation_failure_exits_one(self, tmp_path, capsys):
        (tmp_path / "c.toml").write_text(
            '[slater-check]\nside = 1.0\ncenters = 50\nseparation = 0.9\n'
            'ratios = [5]\ncutoff = 0.4\n')
        assert main(["slater-check", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 1
        record = _json(tmp_path, "slater-check.json")
        assert "packing" in record["error"]
        assert "result" not in record

    def test_bad_thread_env_exits_two(self, tmp_path, capsys, monkeypatch):
        (tmp_path / "c.toml").write_text(
            '[energy]\nrho = 0.01\nscattering_length = 0.1\n')
        monkeypatch.setenv("DILUTEFERMI_THREADS", "many")
        assert main(["energy", str(tmp_path / "c.toml")]) == 2
        assert "DILUTEFERMI_THREADS" in capsys.readouterr().err


class TestRoundTrip:
    def test_summary_reparses(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            '[energy]\nrho = 0.01\nscattering_length = 0.2\nrho_up = 0.007\n'
            'rho_down = 0.003\n')
        assert main(["energy", str(tmp_path / "c.toml"),
                     "--out", str(tmp_path)]) == 0
        text = (tmp_path / "energy.json").read_text()
        record = json.loads(text)
        assert json.dumps(record, indent=2, sort_keys=True) + "\n" == text
