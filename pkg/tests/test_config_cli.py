import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from diracmech import cli, config as cfgmod, selftest
from diracmech.config import ConfigError, build_system, export_template, validate_config
from diracmech.library import build_builtin, list_builtins

HARMONIC = {
    "system": {"builtin": "harmonic"},
    "integrator": {"scheme": "implicit-midpoint", "h": 0.01, "t_final": 2.0},
    "initial": {"q0": [1.0], "v0": [0.0]},
}

CUSTOM = {
    "system": {"custom": {
        "dimension": 2,
        "subsystems": [1, 1],
        "lagrangian": [
            {"coeff": 0.5, "v_exps": [2, 0]},
            {"coeff": 0.5, "v_exps": [0, 2]},
            {"coeff": -0.5, "q_exps": [2, 0]},
        ],
        "coupling": [[1.0, -1.0]],
        "forces": [{"component": 0, "coeff": -0.1, "v_exps": [1, 0]}],
    }},
    "integrator": {"h": 0.01, "t_final": 1.0},
    "initial": {"q0": [1.0, 1.0], "v0": [0.5, 0.5]},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestSchema:
    def test_accepts_builtin_and_custom(self):
        validate_config(HARMONIC)
        validate_config(CUSTOM)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="config: unknown key"):
            validate_config({**HARMONIC, "extra": 1})

    def test_unknown_nested_key_with_path(self):
        bad = json.loads(json.dumps(CUSTOM))
        bad["system"]["custom"]["lagrangian"][0]["power"] = 3
        with pytest.raises(ConfigError, match=r"lagrangian\[0\]: unknown key"):
            validate_config(bad)

    def test_requires_exactly_one_system_kind(self):
        with pytest.raises(ConfigError, match="exactly one"):
            validate_config({"system": {}})
        both = {"system": {"builtin": "harmonic",
                           "custom": CUSTOM["system"]["custom"]}}
        with pytest.raises(ConfigError, match="exactly one"):
            validate_config(both)

    def test_subsystems_must_sum(self):
        bad = json.loads(json.dumps(CUSTOM))
        bad["system"]["custom"]["subsystems"] = [1, 2]
        with pytest.raises(ConfigError, match="sum to dimension"):
            validate_config(bad)

    def test_exponent_validation(self):
        bad = json.loads(json.dumps(CUSTOM))
        bad["system"]["custom"]["lagrangian"][0]["v_exps"] = [2]
        with pytest.raises(ConfigError, match="length 2"):
            validate_config(bad)
        bad["system"]["custom"]["lagrangian"][0]["v_exps"] = [2, -1]
        with pytest.raises(ConfigError, match="non-negative"):
            validate_config(bad)

    def test_scheme_choice(self):
        bad = json.loads(json.dumps(HARMONIC))
        bad["integrator"]["scheme"] = "rk4"
        with pytest.raises(ConfigError, match="integrator.scheme"):
            validate_config(bad)

    def test_output_fields_checked(self):
        bad = {**HARMONIC, "output": {"fields": ["q", "momentum"]}}
        with pytest.raises(ConfigError, match="unknown field"):
            validate_config(bad)


class TestBuildSystem:
    def test_custom_builds_and_simulates(self):
        sys = build_system(validate_config(CUSTOM))
        assert sys.config_dim == 2
        assert sys.constraint_row_count == 1
        assert len(sys.subsystem_slices) == 2
        assert_allclose(sys.force.eval(np.zeros(2), [2.0, 0.0], np.zeros(2)),
                        [-0.2, 0.0])

    def test_affine_coupling_rows(self):
        doc = json.loads(json.dumps(CUSTOM))
        doc["system"]["custom"]["coupling"] = [
            {"constant": [1.0, 0.0], "linear_in_q": [[0.0, 2.0], [0.0, 0.0]]}
        ]
        sys = build_system(validate_config(doc))
        q = np.array([0.3, 0.7])
        assert_allclose(sys.constraint_rows(q), [[1.0 + 1.4, 0.0]])

    def test_export_round_trip_builtins(self):
        rng = np.random.default_rng(0)
        for summary in list_builtins():
            name = summary["name"]
            section = export_template(name)
            doc = validate_config({"system": section})
            rebuilt = build_system(doc)
            original = build_builtin(name)
            assert rebuilt.config_dim == original.config_dim
            n = original.config_dim
            for _ in range(5):
                q, v, p = (rng.standard_normal(n) for _ in range(3))
                assert_allclose(rebuilt.lagrangian.value(q, v),
                                original.lagrangian.value(q, v), atol=1e-12)
                assert_allclose(rebuilt.force.eval(q, v, p),
                                original.force.eval(q, v, p), atol=1e-12)
                assert_allclose(rebuilt.constraint_rows(q),
                                original.constraint_rows(q), atol=1e-12)

    def test_rolling_ball_exports_as_builtin(self):
        section = export_template("rolling-ball")
        assert "builtin" in section


class TestCliSimulate:
    def test_csv_contract(self, tmp_path):
        cfg = write(tmp_path, HARMONIC)
        out = str(tmp_path / "run.csv")
        assert cli.main(["simulate", cfg, "--out", out]) == 0
        lines = (tmp_path / "run.csv").read_text().splitlines()
        assert lines[0] == ("t,q_0,v_0,p_0,E,power_residual,"
                            "constraint_residual_max,newton_iters")
        assert len(lines) == 202
        # 17 significant digits on a non-terminating value.
        final_q = lines[-1].split(",")[1]
        assert len(final_q.replace("-", "").replace(".", "").lstrip("0")) >= 16

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write(tmp_path, HARMONIC)
        outs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            assert cli.main(["simulate", cfg, "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_overrides_change_run_length(self, tmp_path):
        cfg = write(tmp_path, HARMONIC)
        out = str(tmp_path / "short.csv")
        assert cli.main(["simulate", cfg, "--out", out,
                         "--t-final", "0.5", "--h", "0.05"]) == 0
        assert len((tmp_path / "short.csv").read_text().splitlines()) == 12

    def test_field_subset(self, tmp_path):
        doc = {**HARMONIC, "output": {"fields": ["t", "q", "E"]}}
        cfg = write(tmp_path, doc)
        out = str(tmp_path / "subset.csv")
        assert cli.main(["simulate", cfg, "--out", out]) == 0
        lines = (tmp_path / "subset.csv").read_text().splitlines()
        assert lines[0] == "t,q_0,E"

    def test_aborted_run_exits_3_with_partial_csv(self, tmp_path):
        doc = {
            "system": {"custom": {
                "dimension": 1,
                "lagrangian": [{"coeff": 0.5, "v_exps": [2]},
                               {"coeff": -0.25, "q_exps": [4]}],
            }},
            "integrator": {"h": 0.5, "t_final": 2.0, "newton_max_iter": 1},
            "initial": {"q0": [1.5], "v0": [0.0]},
        }
        cfg = write(tmp_path, doc)
        out = tmp_path / "aborted.csv"
        assert cli.main(["simulate", cfg, "--out", str(out)]) == 3
        lines = out.read_text().splitlines()
        assert lines[-1].startswith("# aborted")
        assert len(lines) >= 2

    def test_schema_error_exit_2(self, tmp_path):
        cfg = write(tmp_path, {**HARMONIC, "extra": 1})
        assert cli.main(["simulate", cfg]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert cli.main(["simulate", str(tmp_path / "nope.json")]) == 2

    def test_bad_builtin_exit_2(self, tmp_path):
        cfg = write(tmp_path, {"system": {"builtin": "pendulum"}})
        assert cli.main(["verify", cfg]) == 2

    def test_bad_parameter_exit_2(self, tmp_path):
        cfg = write(tmp_path, {"system": {"builtin": "harmonic",
                                          "params": {"m": -1.0}}})
        assert cli.main(["verify", cfg]) == 2


class TestCliVerifyCompose:
    def test_verify_builtins(self, tmp_path, capsys):
        for name in ("harmonic", "mass-spring", "rlc"):
            cfg = write(tmp_path, {"system": {"builtin": name}}, f"{name}.json")
            assert cli.main(["verify", cfg]) == 0
        out = capsys.readouterr().out
        assert "all verification checks passed" in out

    def test_verify_reports_circuit_kernel(self, tmp_path, capsys):
        cfg = write(tmp_path, {"system": {"builtin": "rlc"}})
        assert cli.main(["verify", cfg]) == 0
        out = capsys.readouterr().out
        assert "constraint rows: 3, rank 3" in out

    def test_verify_reports_canonical_for_unconstrained(self, tmp_path, capsys):
        cfg = write(tmp_path, {"system": {"builtin": "harmonic"}})
        assert cli.main(["verify", cfg]) == 0
        out = capsys.readouterr().out
        assert "canonical structure" in out

    def test_verify_failure_exits_1_and_names_check(self, tmp_path, capsys,
                                                    monkeypatch):
        from diracmech import induced

        monkeypatch.setattr(
            induced, "interconnect_reference",
            lambda spec, q, p: cli.dirac.identity_structure(
                2 * spec.config_dim))
        cfg = write(tmp_path, {"system": {"builtin": "harmonic"}})
        assert cli.main(["verify", cfg]) == 1
        out = capsys.readouterr().out
        assert "FAIL point 0: interconnection-identity" in out

    def test_compose_reports_configuration_velocity(self, tmp_path, capsys):
        cfg = write(tmp_path, {"system": {"builtin": "rlc"}})
        assert cli.main(["compose", cfg]) == 0
        out = capsys.readouterr().out
        assert "configuration velocity dimension: 2" in out

    def test_coupling_row_width_mismatch_exit_2(self, tmp_path):
        doc = json.loads(json.dumps(CUSTOM))
        doc["system"]["custom"]["coupling"] = [[1.0, -1.0, 0.0]]
        cfg = write(tmp_path, doc)
        assert cli.main(["verify", cfg]) == 2

    def test_non_integral_horizon_exit_2(self, tmp_path):
        cfg = write(tmp_path, HARMONIC)
        assert cli.main(["simulate", cfg, "--h", "0.3"]) == 2

    def test_verify_accepts_custom_with_affine_rows(self, tmp_path):
        doc = json.loads(json.dumps(CUSTOM))
        doc["system"]["custom"]["coupling"] = [
            {"constant": [1.0, -1.0], "linear_in_q": [[0.0, 0.5], [0.0, 0.0]]}
        ]
        cfg = write(tmp_path, doc)
        assert cli.main(["verify", cfg]) == 0

    def test_compose_reports_dimensions(self, tmp_path, capsys):
        cfg = write(tmp_path, {"system": {"builtin": "mass-spring"}})
        assert cli.main(["compose", cfg, "--point",
                         "0,0,0,0,0,0,0,0"]) == 0
        out = capsys.readouterr().out
        assert "structure dimension: 8" in out
        assert "velocity projection dimension: 7" in out
        # The boundary-matching force direction (0, 1, -1, 0)/sqrt(2).
        assert "0.707107" in out.split("annihilator directions")[1]

    def test_compose_bad_point_exit_2(self, tmp_path):
        cfg = write(tmp_path, {"system": {"builtin": "harmonic"}})
        assert cli.main(["compose", cfg, "--point", "1,2,3"]) == 2

    def test_usage_error_exit_2(self):
        assert cli.main(["simulate"]) == 2


class TestSelfTest:
    def test_passes_and_reports_suites(self, capsys):
        assert cli.main(["selftest", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert out.count("ok   ") >= 7

    def test_failure_path_shrinks_and_reports(self, capsys, monkeypatch):
        def broken(rng, cases=5):
            raise selftest.SuiteFailure("engineered failure")

        monkeypatch.setattr(selftest, "SUITES",
                            (("broken-suite", broken),) + selftest.SUITES[:1])
        assert selftest.run(seed=0) == 1
        out = capsys.readouterr().out
        assert "FAIL broken-suite" in out

    def test_shrinker_minimizes(self):
        # The predicate fails whenever the two leading entries differ; the
        # minimal failing case keeps a single nonzero entry.
        data = {"m": np.array([5, -3, 7, 0])}

        def still_fails(d):
            return d["m"][0] != d["m"][1]

        small = selftest.shrink_integer_case(data, still_fails)
        assert still_fails(small)
        assert np.abs(small["m"]).sum() == 1
