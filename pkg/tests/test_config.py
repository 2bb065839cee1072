import json
import math

import pytest

from rydrx import config
from rydrx.spectro import TWO_PI
from rydrx.errors import ConfigError


def test_defaults_and_angular_conversion():
    cfg = config.from_dict({"seed": 1})
    s = cfg.system()
    assert s.omega_c == pytest.approx(TWO_PI * 13e6)
    assert cfg.atomic["omega_c"] == pytest.approx(13e6)
    assert cfg.readout.rbw == 10.0 and cfg.readout.lo_power == -4.0
    assert cfg.modem.count == 511 and cfg.modem.cutoff_factor == 2.1
    assert cfg.sweep.sig_powers == [-60.0, -55.0, -50.0, -45.0, -40.0]


def test_missing_seed_names_the_key():
    with pytest.raises(ConfigError) as exc:
        config.from_dict({})
    assert exc.value.field == "seed"


@pytest.mark.parametrize("data,field", [
    ({"seed": 1, "bogus": 1}, "scenario.bogus"),
    ({"seed": 1, "readout": {"rbw_hz": 1}}, "readout.rbw_hz"),
    ({"seed": 1, "readout": {"rbw": "fast"}}, "readout.rbw"),
    ({"seed": 1, "readout": {"rbw": -1}}, "readout.rbw"),
    ({"seed": -1}, "seed"),
    ({"seed": 1, "modem": {"pulse": "sinc"}}, "modem.pulse"),
    ({"seed": 1, "atomic": {"temperature": -5}}, "atomic"),
    ({"seed": 1, "sweep": {"sig_powers": [-60, -58, -56]}}, "sweep.sig_powers"),
    ({"seed": 1, "modem": {"prbs": 1}}, "modem.prbs"),
])
def test_validation_errors_name_field(data, field):
    with pytest.raises(ConfigError) as exc:
        config.from_dict(data)
    assert exc.value.field == field


def test_overrides_parse_json_values():
    data = config.apply_overrides({"seed": 1}, ["readout.rbw=100", "modem.pulse=nrz",
                                                "sweep.beatnotes=[1e4, 1e5, 1e6, 1e7]"])
    cfg = config.from_dict(data)
    assert cfg.readout.rbw == 100.0 and cfg.modem.pulse == "nrz"
    assert cfg.sweep.beatnotes == [1e4, 1e5, 1e6, 1e7]
    with pytest.raises(ConfigError):
        config.apply_overrides({}, ["novalue"])


def test_roundtrip_through_dict_and_json():
    cfg = config.from_dict({"seed": 7, "noise": {"detector_floor": "-inf"}})
    assert math.isinf(cfg.noise.detector_floor)
    text = json.dumps(cfg.to_dict())
    back = config.from_dict(json.loads(text))
    assert back == cfg and back.digest() == cfg.digest()
    assert cfg.with_overrides(["seed=8"]).seed == 8


def test_load_rejects_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{seed: 1")
    with pytest.raises(ConfigError):
        config.load(p)
