import csv
import json

import numpy as np
import pytest
import yaml

from iemi_sim.cli import main
from iemi_sim.errors import ConfigError, ScenarioValidationError
from iemi_sim.fixtures import FIXTURES, fixture_path, load_fixture
from iemi_sim.output import read_timeseries, recompute_windows
from iemi_sim.scenario import load_scenario, parse_scenario, scenario_to_dict
from iemi_sim.units import parse_quantity


def cv1_data():
    return yaml.safe_load(fixture_path("CV-1").read_text())


def write(tmp_path, data, name="s.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


class TestUnits:
    @pytest.mark.parametrize(
        "text, dim, value",
        [("10 ms", "time", 0.01), ("72 MHz", "frequency", 72e6), ("4 cm", "length", 0.04),
         ("200 mW", "power", 0.2), ("0.5 ohm", "resistance", 0.5), ("4 cm2", "area", 4e-4), (3, "voltage", 3.0)],
    )
    def test_parse(self, text, dim, value):
        assert parse_quantity(text, dim) == value

    @pytest.mark.parametrize("text, dim", [("10 furlongs", "time"), ("10 V", "time"), ("abc", "voltage")])
    def test_reject(self, text, dim):
        with pytest.raises(ValueError):
            parse_quantity(text, dim)


class TestScenarioFiles:
    def test_cv1_operating_point(self, cv1):
        op = cv1.operating_point
        assert (op.V_bat, op.R_bat, op.V_out_ref, op.phi_grid, op.V_p, op.V_n) == (500, 0.5, 502, 45, 480, 176)
        assert cv1.attacks[0].window == (0.01, 0.04)
        assert cv1.attacks[0].offset == -1.0

    def test_every_fixture_loads(self):
        for name in FIXTURES:
            assert load_fixture(name).name == name

    def test_zero_resistance_names_field(self):
        data = cv1_data()
        data["operating_point"]["R_bat"] = "0 ohm"
        with pytest.raises(ScenarioValidationError) as info:
            parse_scenario(data)
        assert "operating_point.R_bat" in str(info.value)

    def test_reports_all_errors(self):
        data = cv1_data()
        data["operating_point"]["R_bat"] = 0
        data["plant"]["tau_p"] = "1 V"
        data["bogus"] = 1
        with pytest.raises(ScenarioValidationError) as info:
            parse_scenario(data)
        paths = {p for p, _ in info.value.errors}
        assert {"operating_point.R_bat", "plant.tau_p", "bogus"} <= paths

    def test_round_trip(self, cv1):
        assert parse_scenario(scenario_to_dict(cv1)) == cv1

    def test_gate_round_trip(self):
        s = load_fixture("GD-1")
        assert parse_scenario(scenario_to_dict(s)) == s

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "missing.yaml")
        bad = tmp_path / "bad.yaml"
        bad.write_text("a: [1, 2\n")
        with pytest.raises(ConfigError):
            load_scenario(bad)

    def test_unknown_fixture(self):
        with pytest.raises(ConfigError):
            fixture_path("nope")


class TestCli:
    @pytest.mark.parametrize("name", list(FIXTURES))
    def test_validate_fixtures(self, name, capsys):
        assert main(["validate", name]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_file(self, tmp_path, capsys):
        data = cv1_data()
        data["operating_point"]["R_bat"] = 0
        assert main(["validate", str(write(tmp_path, data))]) == 1
        assert "operating_point.R_bat" in capsys.readouterr().err

    def test_diverged_exit_code(self, tmp_path):
        data = cv1_data()
        data["operating_point"].update(V_p=1e308, V_n=1e308)
        data["attacks"] = []
        data["duration"] = "1 ms"
        assert main(["simulate", str(write(tmp_path, data)), "-o", str(tmp_path / "out")]) == 2

    def test_fixtures_listing(self, capsys):
        assert main(["fixtures"]) == 0
        out = capsys.readouterr().out
        assert all(name in out for name in FIXTURES)

    def test_simulate_writes_outputs(self, tmp_path, cv1):
        out = tmp_path / "res"
        assert main(["simulate", "CV-1", "-o", str(out)]) == 0
        with (out / "timeseries.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:7] == ["time_s", "v_out_V", "v_sense_V", "i_out_A", "d_mag", "attack_active", "i_sense_A"]
        assert len(rows) - 1 == round(cv1.duration / cv1.step) + 1
        doc = json.loads((out / "summary.json").read_text())
        assert doc["scenario"]["operating_point"]["R_bat"] == 0.5
        assert [w["label"] for w in doc["summary"]["windows"]] == ["pre", "attack_0", "post"]

    def test_csv_reproduces_summary(self, tmp_path):
        out = tmp_path / "res"
        main(["simulate", "CV-1", "-o", str(out)])
        doc = json.loads((out / "summary.json").read_text())
        assert recompute_windows(out) == doc["summary"]["windows"]

    def test_no_attack_csv(self, tmp_path):
        data = cv1_data()
        data["attacks"] = []
        data["duration"] = "5 ms"
        out = tmp_path / "res"
        assert main(["simulate", str(write(tmp_path, data)), "-o", str(out)]) == 0
        series = read_timeseries(out / "timeseries.csv")
        assert np.all(series["attack_active"] == 0)

    def test_gate_summary_has_shoot_through(self, tmp_path):
        out = tmp_path / "gd1"
        assert main(["simulate", "GD-1", "-o", str(out)]) == 0
        doc = json.loads((out / "summary.json").read_text())
        assert [e["type"] for e in doc["events"]] == ["shoot_through"]
        assert "vG_S2_V" in (out / "timeseries.csv").read_text().splitlines()[0]

    def test_sweep(self, tmp_path):
        out = tmp_path / "sw"
        code = main(["sweep", "GD-1", "--param", "attacks.0.source.power",
                     "--from", "2 W", "--to", "12 W", "--step", "2 W", "-o", str(out)])
        assert code == 0
        with (out / "sweep.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["value"]) for r in rows] == [2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
        assert [int(r["events.shoot_through"]) for r in rows] == [0, 0, 0, 0, 1, 1]

    def test_sweep_bad_path(self, tmp_path, capsys):
        code = main(["sweep", "CV-1", "--param", "attacks.0.nope", "--from", "0", "--to", "1", "--step", "1",
                     "-o", str(tmp_path / "sw")])
        assert code == 1
        assert "attacks.0.nope" in capsys.readouterr().err
