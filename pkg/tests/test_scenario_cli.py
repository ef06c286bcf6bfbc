import json
import math
from pathlib import Path

import numpy as np
import pytest

from rotorct.errors import ConfigInvalid
from rotorct.scenario_cli import (UNIT_PRESETS, load_config, main, parse_config, preset_table,
                                  run_scenario, units_convert)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FAST = sorted(p for p in SCENARIOS.glob("*.json") if "kinetic_run" not in p.name)


def write(tmp_path, obj, name="cfg.json"):
    tmp_path.mkdir(parents=True, exist_ok=True)
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def run_cli(tmp_path, obj, *extra, mode=None):
    cfg = write(tmp_path, obj)
    out = tmp_path / "out"
    mode = mode or obj["mode"]
    code = main([mode, "--config", cfg, "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


AFFINE_HALF = {"mode": "classify", "k": 0.5,
               "field": {"kind": "affine", "A": [[0.5, 0.0], [0.0, 0.5]]},
               "grid": {"nx": 4, "ny": 4, "x": [-1, 1], "y": [-1, 1]}}
STRAIN = {"mode": "integrate", "k": 1.0, "field": {"kind": "affine", "A": [[2.0, 0.0], [0.0, -2.0]]},
          "integrate": {"alpha": [0.0, 0.0]}}


class TestUnits:
    def test_gulf_stream(self):
        u = units_convert(0.07, 1e5, 1.0)
        assert u.Omega_rad_per_s == pytest.approx(7.142857e-5, rel=1e-6)
        assert u.inertial_period_hours == pytest.approx(12.22, abs=0.005)
        assert 2 * u.k * u.epsilon == pytest.approx(1.0, rel=1e-15)
        assert u.inertial_period_s == pytest.approx(math.pi / u.Omega_rad_per_s, rel=1e-15)

    def test_weather_same_omega(self):
        a, b = units_convert(0.07, 1e5, 1.0), units_convert(0.14, 1e6, 20.0)
        assert a.Omega_rad_per_s == pytest.approx(b.Omega_rad_per_s, rel=1e-12)

    def test_trivial(self):
        u = units_convert(0.5, 1.0, 1.0)
        assert u.k == 1.0 and u.inertial_period_scaled == pytest.approx(math.pi)

    def test_presets(self):
        t = preset_table()
        assert t["weather"]["status"] == "reproduced"
        assert abs(t["weather"]["computed_hours"] - t["weather"]["reference_hours"]) < 0.05
        assert t["gulf_stream"]["status"] == "discrepancy"
        assert {UNIT_PRESETS[n].status for n in ("earth_core", "jupiter")} == {"excluded"}


class TestModes:
    def test_classify_example(self, tmp_path):
        code, rep, out = run_cli(tmp_path, AFFINE_HALF)
        assert code == 0 and rep["verdict"] == "Subcritical"
        assert rep["min_i0"] == pytest.approx(1.0, rel=1e-15)
        assert (out / "classify.csv").read_text().startswith("alpha_x,alpha_y,")

    def test_integrate_strain(self, tmp_path):
        code, rep, out = run_cli(tmp_path, STRAIN)
        assert code == 0
        lo, hi = rep["trajectory"]["blowup"]["t_lo"], rep["trajectory"]["blowup"]["t_hi"]
        assert lo < math.pi / 6 < hi and rep["bracket_contains_singularity"]
        rows = (out / "trajectory.csv").read_text().strip().splitlines()
        assert float(rows[-1].split(",")[0]) < hi

    def test_period_sweep(self, tmp_path):
        obj = {"mode": "period", "k": 0.7, "period": {"theta0": [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]}}
        code, rep, out = run_cli(tmp_path, obj)
        assert code == 0
        lines = (out / "period.csv").read_text().strip().splitlines()
        assert lines[0] == "theta0,T_bar,err_estimate,T_bar_times_k_over_pi"
        assert all(abs(float(l.split(",")[3]) - 1) <= 1e-11 for l in lines[1:])

    def test_flowmap_and_classify_agree(self, tmp_path, rng):
        for i in range(10):
            A = (rng.normal(size=(2, 2)) * 1.0).tolist()
            base = {"k": 0.8, "field": {"kind": "affine", "A": A}}
            c1, r1, _ = run_cli(tmp_path / f"c{i}",
                                {**base, "mode": "classify", "grid": {"nx": 2, "ny": 2, "x": [0, 1], "y": [0, 1]}})
            c2, r2, _ = run_cli(tmp_path / f"f{i}", {**base, "mode": "flowmap", "flowmap": {"alpha": [0, 0]}})
            assert r2["verdict_matches_singularity"]
            assert r1["verdict"] == r2["verdict"]
            assert (r2["first_singularity"] is None) == (r1["verdict"] == "Subcritical")

    def test_kinetic_check(self, tmp_path):
        obj = {"mode": "kinetic-check", "k": 1.0,
               "kinetic_check": {"rho": 2.0, "U": [1.0, -1.0], "temperature": 0.5, "N": 128}}
        code, rep, _ = run_cli(tmp_path, obj)
        assert code == 0
        assert rep["forcing"]["momentum_abs_error"] <= 1e-5
        assert rep["closure_deviation_ratio_half_T"] == pytest.approx(0.5)

    def test_units_mode(self, tmp_path):
        code, rep, out = run_cli(tmp_path, {"mode": "units",
                                            "units": {"epsilon": 0.14, "L_bar_m": 1e6, "U_bar_mps": 20.0}})
        assert code == 0 and rep["inertial_period_hours"] == pytest.approx(12.22, abs=0.005)
        assert (out / "units_presets.csv").exists()

    def test_kinetic_run_small(self, tmp_path):
        obj = {"mode": "kinetic-run", "k": 1.0, "kinetic": {"Nx": 4, "Nv": 24, "t_end": 0.2}}
        code, rep, out = run_cli(tmp_path, obj)
        assert code == 0 and rep["diagnostics"]["max_mass_drift_rel"] <= 1e-12
        assert (out / "moments_final.bin").exists() and (out / "diagnostics.csv").exists()


class TestExitCodes:
    def test_fail_on_supercritical(self, tmp_path):
        obj = {**AFFINE_HALF, "field": {"kind": "affine", "A": [[2.0, 0.0], [0.0, -2.0]]}}
        assert run_cli(tmp_path / "a", obj)[0] == 0
        code, rep, _ = run_cli(tmp_path / "b", obj, "--fail-on-supercritical")
        assert code == 2 and rep["verdict"] == "Supercritical"

    def test_marginal_counts_as_failure(self, tmp_path):
        # rigid rotation omega0 = 2k, det0 = k^2 at k = 1: i0 = 0
        obj = {**AFFINE_HALF, "k": 1.0, "field": {"kind": "affine", "A": [[0.0, 1.0], [-1.0, 0.0]]}}
        code, rep, _ = run_cli(tmp_path, obj, "--fail-on-supercritical")
        assert rep["verdict"] == "Marginal" and code == 2

    def test_subcritical_with_flag(self, tmp_path):
        assert run_cli(tmp_path, AFFINE_HALF, "--fail-on-supercritical")[0] == 0

    def test_missing_file(self, tmp_path, capsys):
        assert main(["classify", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1
        assert "rotorct" in capsys.readouterr().err


class TestConfigErrors:
    def bad(self, tmp_path, obj, capsys, fragment, mode=None):
        code, rep, _ = run_cli(tmp_path, obj, mode=mode or (obj.get("mode") if isinstance(obj, dict) else "classify"))
        err = capsys.readouterr().err
        assert code == 1 and rep is None
        assert fragment in err, err

    def test_json_syntax_position(self, tmp_path, capsys):
        text = '{\n  "mode": "classify",\n  "k": 0.5,,\n}'
        p = write(tmp_path, text)
        assert main(["classify", "--config", p, "--out", str(tmp_path / "o")]) == 1
        assert f"{p}:3:" in capsys.readouterr().err

    def test_both_k_and_units(self, tmp_path, capsys):
        obj = {**AFFINE_HALF, "units": {"epsilon": 0.5, "L_bar_m": 1, "U_bar_mps": 1}}
        self.bad(tmp_path, obj, capsys, "k")

    def test_neither_k_nor_units(self, tmp_path, capsys):
        obj = {key: v for key, v in AFFINE_HALF.items() if key != "k"}
        self.bad(tmp_path, obj, capsys, "k")

    def test_field_path_in_message(self, tmp_path, capsys):
        obj = {**AFFINE_HALF, "field": {"kind": "affine", "A": [[0.5, 0.0], [0.0, "x"]]}}
        self.bad(tmp_path, obj, capsys, "field.A[1]")

    def test_unknown_key(self, tmp_path, capsys):
        self.bad(tmp_path, {**AFFINE_HALF, "colour": 1}, capsys, "colour")

    def test_missing_subconfig(self, tmp_path, capsys):
        self.bad(tmp_path, {"mode": "flowmap", "k": 1.0}, capsys, "field")

    def test_mode_conflict(self, tmp_path, capsys):
        self.bad(tmp_path, AFFINE_HALF, capsys, "mode", mode="period")

    def test_negative_epsilon(self, tmp_path, capsys):
        self.bad(tmp_path, {"mode": "units", "units": {"epsilon": -1, "L_bar_m": 1, "U_bar_mps": 1}},
                 capsys, "units.epsilon")

    def test_kinetic_k_rejected(self, tmp_path, capsys):
        self.bad(tmp_path, {"mode": "kinetic-run", "k": 1.0, "kinetic": {"k": 2.0}}, capsys, "kinetic.k")

    def test_parse_config_raises(self):
        with pytest.raises(ConfigInvalid):
            parse_config({"mode": "nonsense", "k": 1.0})


class TestRoundTripAndDeterminism:
    @pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
    def test_roundtrip(self, path):
        cfg = load_config(path)
        again = parse_config(json.loads(cfg.to_json()))
        assert again == cfg
        assert again.to_json() == cfg.to_json()

    @pytest.mark.parametrize("path", FAST, ids=lambda p: p.stem)
    def test_byte_identical_outputs(self, path, tmp_path):
        cfg = load_config(path)
        run_scenario(cfg, tmp_path / "a")
        run_scenario(cfg, tmp_path / "b")
        for f in sorted((tmp_path / "a").glob("*.csv")):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_seeded_trig_field(self, tmp_path):
        obj = {"mode": "classify", "k": 2.0, "field": {"kind": "trig_poly", "cutoff": 2},
               "grid": {"nx": 4, "ny": 4}}
        c1, r1, o1 = run_cli(tmp_path / "a", obj, "--seed", "11")
        c2, r2, o2 = run_cli(tmp_path / "b", obj, "--seed", "11")
        c3, r3, _ = run_cli(tmp_path / "c", obj, "--seed", "12")
        assert (o1 / "classify.csv").read_bytes() == (o2 / "classify.csv").read_bytes()
        assert r1["min_i0"] != r3["min_i0"]
