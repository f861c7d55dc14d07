import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iemi_sim.coupling import AttackSource, CouplingChannel, RadiatorGeometry, induced_amplitude
from iemi_sim.errors import ConfigError, NoThresholdError, TopologyError
from iemi_sim.gate import (
    BridgeTopology,
    GateDriverConfig,
    detect_shoot_through,
    false_turnon_threshold,
    gate_response,
    gate_trace,
    initial_switch,
    threshold_power,
    three_level_afb,
    unfolder,
)

INSTANT = GateDriverConfig(response_mode="instantaneous")
ENVELOPE = GateDriverConfig()
F = 72e6


def states(topology, on):
    return {sid: initial_switch(ENVELOPE, sid, sid in on) for sid in topology.switch_ids}


class TestDriver:
    def test_off_without_attack(self):
        s = gate_response(ENVELOPE, initial_switch(ENVELOPE, "S2"), False, 0.0)
        assert not s.actual and s.gate_voltage == -3.0

    def test_on_when_commanded(self):
        s = gate_response(ENVELOPE, initial_switch(ENVELOPE, "S1"), True, 0.0)
        assert s.actual and s.gate_voltage == 18.0

    def test_induced_voltage_turns_on(self):
        s = gate_response(INSTANT, initial_switch(INSTANT, "S2"), False, 0.0, v_i=2.5)
        assert s.actual and s.gate_voltage == 18.0

    @given(st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=50))
    def test_instantaneous_compares_each_sample(self, v):
        t = np.arange(len(v)) * 1e-9
        on = gate_trace(INSTANT, False, v, t)
        assert np.array_equal(on, np.asarray(v) > INSTANT.V_th)

    def test_chatters_on_sinusoid(self):
        t = np.arange(200) / (F * 20)
        v = 3.0 * np.sin(2 * math.pi * F * t)
        on = gate_trace(INSTANT, False, v, t)
        assert 0 < on.sum() < len(on)
        assert np.count_nonzero(np.diff(on.astype(int))) >= 10

    def test_min_dwell_suppresses_chatter(self):
        cfg = GateDriverConfig(response_mode="instantaneous", min_dwell=1e-6)
        t = np.arange(200) / (F * 20)
        v = 3.0 * np.sin(2 * math.pi * F * t)
        on = gate_trace(cfg, False, v, t)
        assert np.count_nonzero(np.diff(on.astype(int))) <= 1

    def test_envelope_mode_holds_on(self):
        s = initial_switch(ENVELOPE, "S2")
        for t in np.arange(10) * 1e-9:
            s = gate_response(ENVELOPE, s, False, t, v_i=-3.0, envelope=3.0)
            assert s.actual

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            GateDriverConfig(V_th=5.0)
        with pytest.raises(ConfigError):
            GateDriverConfig(response_mode="slow")


class TestThreshold:
    channel = CouplingChannel(RadiatorGeometry(0.1, 0.02, 0.02), F, 10.0, peak_gain=10.0)

    def test_reference_value(self):
        # V_th / (G eta 2 pi f) with G eta = 1e-9 H
        d = 0.05
        l = d * (math.e ** (2 * math.pi * 1e-9 / (4e-7 * math.pi * 0.01)) - 1)
        ch = CouplingChannel(RadiatorGeometry(d, 0.01, l), F, 10.0)
        assert false_turnon_threshold(ENVELOPE, ch, F) == pytest.approx(4.420970641441537, rel=1e-9)

    def test_threshold_current_exactly_reaches_v_th(self):
        i_th = false_turnon_threshold(ENVELOPE, self.channel, F)
        v = induced_amplitude(AttackSource(F, amplitude_current=i_th), self.channel)
        assert v == pytest.approx(ENVELOPE.V_th, rel=1e-12)

    def test_power_matches_current(self):
        i_th = false_turnon_threshold(ENVELOPE, self.channel, F)
        assert threshold_power(ENVELOPE, self.channel, F) == pytest.approx(0.5 * i_th**2 * 50)

    def test_zero_coupling(self):
        ch = CouplingChannel(RadiatorGeometry(10.0, 0.02, 5e-324), F, 10.0)
        with pytest.raises(NoThresholdError):
            false_turnon_threshold(ENVELOPE, ch, F)

    @given(p=st.floats(0.0, 100.0))
    def test_turn_on_monotone_in_power(self, p):
        p_th = threshold_power(ENVELOPE, self.channel, F)
        v = induced_amplitude(AttackSource(F, power=p), self.channel)
        s = gate_response(ENVELOPE, initial_switch(ENVELOPE, "S2"), False, 0.0, envelope=v)
        if p > p_th * (1 + 1e-9):
            assert s.actual
        elif p < p_th * (1 - 1e-9):
            assert not s.actual


class TestTopology:
    def test_sizes(self):
        assert three_level_afb().count == 8
        assert unfolder().count == 12
        assert three_level_afb().partner("S1") == "S2"

    def test_no_shoot_through_when_complementary(self):
        topo = three_level_afb()
        assert detect_shoot_through(topo, states(topo, {"S1", "S3", "S5", "S7"})) == []

    def test_detects_leg_short(self):
        topo = three_level_afb()
        events = detect_shoot_through(topo, states(topo, {"S1", "S2", "S3"}), t=1e-3)
        assert len(events) == 1
        assert events[0].leg == 0 and events[0].switches == ("S1", "S2") and events[0].t == 1e-3

    def test_unknown_switch(self):
        topo = three_level_afb()
        bad = states(topo, set())
        bad["S9"] = initial_switch(ENVELOPE, "S9")
        with pytest.raises(TopologyError):
            detect_shoot_through(topo, bad)

    def test_missing_switch(self):
        topo = three_level_afb()
        partial = states(topo, set())
        del partial["S4"]
        with pytest.raises(TopologyError):
            detect_shoot_through(topo, partial)

    def test_bad_legs(self):
        with pytest.raises(ConfigError):
            BridgeTopology(legs=(("A", "A"),))
        with pytest.raises(ConfigError):
            BridgeTopology(legs=(("A", "B"), ("B", "C")))
