# SPDX-License-Identifier: Apache-2.0
import json
import os
import struct
from pathlib import Path

import numpy as np
import pytest

import gridloop

SCENARIOS = Path(os.environ.get("GRIDLOOP_SCENARIO_DIR", Path(__file__).parents[2] / "scenarios"))
GOLDEN = Path(os.environ.get("GRIDLOOP_GOLDEN_DIR", Path(__file__).parents[1] / "golden"))


def scenario(name):
    return gridloop.Scenario.load(SCENARIOS / f"{name}.json")


def shortened(name, duration):
    doc = scenario(name).to_dict()
    doc["duration"] = duration
    doc["events"] = [e for e in doc.get("events", []) if e["t"] <= duration]
    return gridloop.Scenario.from_dict(doc)


def test_gen1_trip_matches_golden_digest():
    rec = gridloop.run(scenario("gen1-trip"))
    golden = json.loads((GOLDEN / "digests.json").read_text())
    assert rec.digest == golden["gen1-trip"]
    assert rec.diagnostic is None
    assert rec.frame_count == 10000


def test_timeseries_shapes_and_values():
    rec = gridloop.run(scenario("gen1-trip"))
    ts = rec.timeseries()
    assert ts["t"].shape == (rec.frame_count,)
    assert np.allclose(np.diff(ts["t"]), 1e-3)
    late = ts["t"] > 9.0
    assert np.all(np.abs(ts["G1.real_power"][late]) < 1.0)
    assert np.all(np.abs(ts["load_bus.voltage_rms"][late] - 220.0) < 11.0)
    frame = rec.frame(0)
    assert frame["timestamp"] == 0.0


def test_stepping_matches_batch_run_and_injection():
    s = shortened("nominal", 0.5)
    sim = gridloop.Simulation(s)
    while sim.step():
        pass
    assert sim.finished
    assert sim.record().digest == gridloop.run(s).digest

    sim = gridloop.Simulation(s)
    for _ in range(100):
        sim.step()
    ok, reason = sim.inject({"t": 0.0, "kind": "generator_trip", "params": {"generator": "G2"}})
    assert ok, reason
    ok, reason = sim.inject({"t": 0.0, "kind": "generator_trip", "params": {"generator": "G9"}})
    assert not ok and "G9" in reason
    sim.run()
    assert any("breaker=B2:open" in line for line in sim.record().decision_log)


def test_invalid_scenario_raises_with_problems():
    doc = scenario("nominal").to_dict()
    doc["duration"] = -1.0
    with pytest.raises(gridloop.ValidationError) as err:
        gridloop.Simulation(gridloop.Scenario.from_dict(doc))
    assert any("duration" in p for p in err.value.problems)


def test_csv_groups():
    s = shortened("nominal", 0.01)
    csv = gridloop.run(s).csv()
    assert set(csv) == set(gridloop.csv_groups())
    assert len(csv["load_bus"].splitlines()) == 11


def test_meter_codec_round_trip_and_crc():
    assert gridloop.crc16(b"123456789") == 0x29B1
    wire = gridloop.encode_meter_frame(7, 42, [(0x01, 2200), (0x05, 4667)])
    assert wire[0] == 0xA5 and len(wire) == 4 + 2 * 4 + 2
    status, frame = gridloop.decode_meter_frame(wire)
    assert status == "ok"
    assert frame["entries"] == [(0x01, 2200), (0x05, 4667)]
    assert gridloop.register_to_si(0x01, 2200) == pytest.approx(220.0)
    bad = bytearray(wire)
    bad[5] ^= 0x10
    assert gridloop.decode_meter_frame(bytes(bad))[0] == "bad_crc"


def test_service_framing():
    msg = {"kind": "hello", "proto_version": gridloop.PROTO_VERSION, "token": "x"}
    wire = gridloop.frame_message(msg)
    (length,) = struct.unpack(">I", wire[:4])
    assert length == len(wire) - 4
    assert json.loads(wire[4:]) == msg
    assert "sync_request" in gridloop.command_names()
