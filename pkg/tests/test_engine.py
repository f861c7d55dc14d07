import dataclasses

import numpy as np
import pytest

from iemi_sim.engine import (
    AttackSpec,
    GateSetup,
    Scenario,
    run_scenario,
    run_sweep,
    set_parameter,
    summarize,
    summarize_series,
    window_mean,
)
from iemi_sim.errors import ConfigError, RangeError, ScenarioValidationError, SimulationDiverged
from iemi_sim.fixtures import load_fixture
from iemi_sim.plant import OperatingPoint


def short_cv1(cv1, duration=0.02, window=(0.005, 0.012)):
    attack = dataclasses.replace(cv1.attacks[0], window=window)
    return dataclasses.replace(cv1, duration=duration, attacks=(attack,), settling_guard=0.003)


def no_attack(s):
    return dataclasses.replace(s, attacks=())


class TestRun:
    def test_series_layout(self, cv1_result):
        s = cv1_result.scenario
        assert list(cv1_result.series)[:7] == [
            "time_s", "v_out_V", "v_sense_V", "i_out_A", "d_mag", "attack_active", "i_sense_A",
        ]
        assert len(cv1_result.time) == s.n_steps + 1 == 6001
        assert cv1_result.time[-1] == pytest.approx(0.06)

    def test_attack_window_half_open(self, cv1_result):
        active = cv1_result.series["attack_active"]
        t = cv1_result.time
        assert active.sum() == 3000
        assert t[np.argmax(active)] == pytest.approx(0.01)
        assert active[np.searchsorted(t, 0.04 - 1e-9)] == 0

    def test_deterministic(self, cv1):
        s = short_cv1(cv1)
        a, b = run_scenario(s), run_scenario(s)
        for k in a.series:
            assert np.array_equal(a.series[k], b.series[k])
        assert a.joule_heat == b.joule_heat

    def test_seeded_sample_phase(self):
        base = load_fixture("CV-W")
        attack = dataclasses.replace(base.attacks[0], window=(0.005, 0.015))
        s = dataclasses.replace(base, duration=0.02, attacks=(attack,), random_sample_phase=True, seed=7)
        a, b = run_scenario(s), run_scenario(s)
        c = run_scenario(dataclasses.replace(s, seed=8))
        assert np.array_equal(a.series["v_sense_V"], b.series["v_sense_V"])
        assert not np.array_equal(a.series["v_sense_V"], c.series["v_sense_V"])

    def test_no_attack_is_flat(self, cv1):
        r = run_scenario(no_attack(short_cv1(cv1)))
        assert np.all(r.series["attack_active"] == 0)
        assert np.allclose(r.series["i_out_A"], 4.0, atol=1e-9)
        assert r.events == []

    def test_pwm_without_attack_has_no_shoot_through(self, cv1):
        s = dataclasses.replace(no_attack(short_cv1(cv1)), gate=GateSetup(pwm_frequency=20e3))
        r = run_scenario(s)
        assert r.events_of("shoot_through") == []
        vg = r.series["vG_S1_V"]
        assert set(np.unique(vg)) == {-3.0, 18.0}

    def test_gate_attack_logs_shoot_through(self, gd1_result):
        ev = gd1_result.events_of("shoot_through")
        assert len(ev) == 1
        assert ev[0].t == pytest.approx(2e-4)
        assert ev[0].detail == {"leg": 0, "switches": ["S1", "S2"]}

    def test_zero_duty_logs_reverse_current(self, cv1):
        s = no_attack(short_cv1(cv1))
        s = dataclasses.replace(s, controller=dataclasses.replace(s.controller, closed_loop=False, fixed_duty=0.0))
        r = run_scenario(s)
        assert [e.type for e in r.events] == ["saturation", "reverse_current"]
        assert r.events[0].detail == {"level": "lower"}

    def test_divergence(self, cv1):
        s = no_attack(short_cv1(cv1))
        s = dataclasses.replace(s, operating_point=OperatingPoint(V_p=1e308, V_n=1e308))
        with pytest.raises(SimulationDiverged) as info:
            run_scenario(s)
        assert info.value.step >= 1


class TestValidation:
    def test_step_too_large(self, cv1):
        with pytest.raises(ScenarioValidationError) as info:
            dataclasses.replace(cv1, step=1e-4)
        assert "step" in [p for p, _ in info.value.errors]

    def test_window_beyond_duration(self, cv1):
        with pytest.raises(ScenarioValidationError) as info:
            dataclasses.replace(cv1, duration=0.03)
        assert "attacks.0.window" in [p for p, _ in info.value.errors]

    def test_overlapping_attacks(self, cv1):
        a = cv1.attacks[0]
        b = dataclasses.replace(a, window=(0.03, 0.05))
        with pytest.raises(ScenarioValidationError):
            dataclasses.replace(cv1, attacks=(a, b))

    def test_gate_attack_needs_gate(self, cv1):
        a = AttackSpec("gate_signal", "offset_injection", (0.01, 0.02), offset=3.0, target="S2")
        with pytest.raises(ScenarioValidationError):
            dataclasses.replace(cv1, attacks=(a,))


class TestSummaries:
    def test_constant_series(self):
        t = np.arange(11) * 0.1
        table = summarize_series({"time_s": t, "x": np.full(11, 2.5)}, [(0.0, 1.0)], guard=0.0)
        st = table[0]["channels"]["x"]
        assert st["mean"] == st["min"] == st["max"] == 2.5
        assert table[0]["samples"] == 11

    def test_half_open_membership(self):
        t = np.arange(11) * 0.1
        table = summarize_series({"time_s": t, "x": t}, [(0.0, 0.5), (0.5, 1.0)], guard=0.0)
        assert [w["samples"] for w in table] == [5, 6]
        assert table[0]["channels"]["x"]["max"] == pytest.approx(0.4)

    def test_guard_excludes_from_mean_only(self):
        t = np.arange(11) * 0.1
        x = np.where(t < 0.25, 100.0, 1.0)
        table = summarize_series({"time_s": t, "x": x}, [(0.0, 1.0)], edges=[0.0], guard=0.25)
        assert table[0]["channels"]["x"]["mean"] == 1.0
        assert table[0]["channels"]["x"]["max"] == 100.0

    def test_out_of_range(self, cv1_result):
        with pytest.raises(RangeError):
            summarize(cv1_result, [(0.05, 0.07)])
        with pytest.raises(RangeError):
            summarize(cv1_result, [(0.02, 0.01)])

    def test_default_windows(self, cv1_result):
        labels = [w["label"] for w in cv1_result.summary["windows"]]
        assert labels == ["pre", "attack_0", "post"]

    def test_window_mean(self, cv1_result):
        assert window_mean(cv1_result, "i_out_A", 0.0, 0.01) == pytest.approx(4.0)


class TestSweep:
    def test_set_parameter(self, cv1):
        s = set_parameter(cv1, "attacks.0.offset", -0.5)
        assert s.attacks[0].offset == -0.5 and cv1.attacks[0].offset == -1.0

    def test_power_clears_amplitude(self):
        s = set_parameter(load_fixture("CV-W"), "attacks.0.source.power", 1.0)
        assert s.attacks[0].source.power == 1.0 and s.attacks[0].source.amplitude_current is None

    @pytest.mark.parametrize("path", ["attacks.3.offset", "plant.nope", "", "name", "attacks.0"])
    def test_unknown_path(self, cv1, path):
        with pytest.raises(ConfigError):
            set_parameter(cv1, path, 1.0)

    def test_empty(self, cv1):
        assert run_sweep(cv1, "attacks.0.offset", []) == []

    def test_sorted_and_independent_of_jobs(self, cv1):
        s = short_cv1(cv1, duration=0.035, window=(0.005, 0.03))
        s = dataclasses.replace(s, settling_guard=0.015)
        values = [-0.5, -1.0, 0.0]
        serial = run_sweep(s, "attacks.0.offset", values, jobs=1)
        parallel = run_sweep(s, "attacks.0.offset", values, jobs=2)
        assert [v for v, _ in serial] == [-1.0, -0.5, 0.0]
        assert serial == parallel
        deltas = [r["attack_effect"]["attack_0"]["i_out_A"] for _, r in serial]
        assert deltas == pytest.approx([2.0, 1.0, 0.0], abs=0.05)

    def test_frequency_response_peaks_at_resonance(self):
        s = load_fixture("SENS-V")
        values = [300e6, 350e6, 400e6, 450e6, 500e6]
        out = run_sweep(s, "attacks.0.source.frequency", values)
        deltas = [r["attack_effect"]["attack_0"]["v_sense_V"] for _, r in out]
        assert int(np.argmax(deltas)) == 2
        assert all(d > 0 for d in deltas)
