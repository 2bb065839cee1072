"""Scenario configuration: defaults, JSON loading, overrides, validation.

A scenario file is a JSON object with optional blocks ``atomic``, ``noise``,
``readout``, ``sweep`` and ``modem`` plus top-level ``seed`` and ``output``.
Every block key has a default; ``seed`` is required. In the ``atomic``
block, Rabi frequencies, detunings and rates are given in cyclic Hz and
converted to rad/s.
"""

from dataclasses import dataclass, field, fields, asdict, replace
import copy
import hashlib
import json
import math

from .errors import ConfigError, RydrxError
from .spectro import AtomicSystem, EA0, TWO_PI
from .readout import NoiseModel, DEFAULT_KAPPA

ANGULAR = ("omega_p", "omega_c", "omega_rf", "delta_p", "delta_c", "delta_rf",
           "gamma_e", "gamma_r", "gamma_t")


def _atomic_defaults():
    out = {}
    for f in fields(AtomicSystem):
        value = f.default
        out[f.name] = value / TWO_PI if f.name in ANGULAR else value
    out["dipole_moment_au"] = 2700.0
    return out


@dataclass
class ReadoutBlock:
    c_cal: float = 0.58  # V/m per sqrt(mW)
    lo_power: float = -4.0  # dBm
    f_lo: float = 17.041e9
    kappa: float = DEFAULT_KAPPA
    homodyne_override: float | None = 100.0
    p_lo_optical: float = 1.0  # mW
    p_sig_optical: float = 0.005  # mW
    detector_gain: float = 0.025  # V per unit transmission change
    rbw: float = 10.0
    traces_per_point: int = 5
    fs_factor: float = 4.2


@dataclass
class SweepBlock:
    sig_powers: list = field(default_factory=lambda: [-60.0, -55.0, -50.0, -45.0, -40.0])
    beatnote: float = 100e3
    beatnotes: list = field(default_factory=lambda: [
        10e3, 30e3, 100e3, 300e3, 1e6, 2e6, 3e6, 4e6, 5e6, 6e6, 7e6, 8e6, 9e6, 10e6])
    bandwidth_rbw: float = 100.0
    repetitions: int = 5
    cal_powers: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5,
                                                      4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0])
    cal_omega_c: float = 2e6  # Hz, weak coupling for resolved AT peaks
    cal_c_cal_true: float = 0.58
    cal_noise: float = 0.01
    cal_scan_points: int = 801
    cal_dataset: str | None = None  # "bundled" or a CSV path
    axis_scale_true: float = 200e6  # Hz per raw scan unit
    spectrum_span: float = 150e6
    spectrum_points: int = 1501
    spectrum_rf_power: float = 3.0  # dBm
    noise_rbw: float = 1e3
    noise_averages: int = 10
    noise_f_min: float = 10e3
    noise_f_max: float = 10e6
    noise_display_points: int = 1001


@dataclass
class ModemBlock:
    symbol_rate: float = 100e3
    count: int = 511
    prbs: bool = True
    pulse: str = "rc"
    rolloff: float = 0.35
    cutoff_factor: float = 2.1
    sig_power: float = -20.0
    beatnote: float = 2e6
    symbol_rates: list = field(default_factory=lambda: [50e3, 100e3, 200e3, 400e3])
    beatnotes: list = field(default_factory=lambda: [0.5e6, 1e6, 2e6, 3e6, 4e6, 5e6, 6e6, 8e6, 10e6, 12e6])
    sweep: str = "beatnote"  # or "symbol_rate"
    mixer_bandwidth: float = 500e6
    n_seeds: int = 20
    traces_per_point: int = 5
    iq_swap: bool = True


@dataclass
class ScenarioConfig:
    atomic: dict = field(default_factory=_atomic_defaults)
    noise: NoiseModel = field(default_factory=NoiseModel)
    readout: ReadoutBlock = field(default_factory=ReadoutBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    modem: ModemBlock = field(default_factory=ModemBlock)
    seed: int = 0
    output: str = "rydrx-out"

    # ---- derived objects -------------------------------------------------
    def system(self, **changes):
        kw = {k: (v * TWO_PI if k in ANGULAR else v)
              for k, v in self.atomic.items() if k != "dipole_moment_au"}
        kw.update(changes)
        return AtomicSystem(**kw)

    @property
    def dipole(self):
        return self.atomic["dipole_moment_au"] * EA0

    def to_dict(self):
        d = asdict(self)
        d["noise"] = {k: _jsonable(v) for k, v in asdict(self.noise).items()}
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **blocks):
        return replace(self, **blocks)

    def with_overrides(self, pairs):
        return from_dict(apply_overrides(self.to_dict(), pairs))


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return v


def _float_or_inf(v):
    if isinstance(v, str) and v.strip() in ("-inf", "inf", "+inf"):
        return float(v)
    return v


_BLOCKS = {"noise": NoiseModel, "readout": ReadoutBlock, "sweep": SweepBlock, "modem": ModemBlock}
_REQUIRED = ("seed",)


def _check_keys(name, given, allowed):
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown key {name}.{key}", field=f"{name}.{key}")


def _coerce(name, key, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}.{key} must be a boolean", field=f"{name}.{key}")
        return value
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        value = _float_or_inf(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}.{key} must be a number", field=f"{name}.{key}")
        return type(default)(value) if isinstance(default, int) else float(value)
    if isinstance(default, list) and not isinstance(value, list):
        raise ConfigError(f"{name}.{key} must be a list", field=f"{name}.{key}")
    return value


def from_dict(data):
    """Build and validate a ScenarioConfig from a plain mapping."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    allowed = {"atomic", *_BLOCKS, "seed", "output"}
    _check_keys("scenario", data, allowed)
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"missing required key '{key}'", field=key)
    cfg = ScenarioConfig()
    atomic = _atomic_defaults()
    given = data.get("atomic") or {}
    _check_keys("atomic", given, atomic)
    for k, v in given.items():
        atomic[k] = _coerce("atomic", k, v, atomic[k] if atomic[k] is not None else 0.0)
    blocks = {}
    for name, cls in _BLOCKS.items():
        given = data.get(name) or {}
        defaults = {f.name: getattr(cls(), f.name) for f in fields(cls)}
        _check_keys(name, given, defaults)
        kw = {k: _coerce(name, k, v, defaults[k]) for k, v in given.items()}
        try:
            blocks[name] = cls(**{**defaults, **kw})
        except RydrxError as exc:
            raise ConfigError(f"{name}: {exc}", field=name) from exc
    seed = data["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", field="seed")
    cfg = ScenarioConfig(atomic=atomic, seed=seed, output=str(data.get("output", cfg.output)),
                         **blocks)
    validate(cfg)
    return cfg


def validate(cfg):
    """Check module-level preconditions before any run."""
    try:
        cfg.system()
    except RydrxError as exc:
        raise ConfigError(f"atomic: {exc}", field="atomic") from exc
    if not cfg.atomic["dipole_moment_au"] > 0:
        raise ConfigError("dipole moment must be > 0", field="atomic.dipole_moment_au")
    r, s, m = cfg.readout, cfg.sweep, cfg.modem
    checks = [
        (r.c_cal > 0, "readout.c_cal", "must be > 0"),
        (r.kappa >= 0, "readout.kappa", "must be >= 0"),
        (r.rbw > 0, "readout.rbw", "must be > 0"),
        (r.traces_per_point >= 1, "readout.traces_per_point", "must be >= 1"),
        (r.fs_factor > 4, "readout.fs_factor", "must exceed 4 (Nyquist margin)"),
        (r.p_lo_optical > 0 and r.p_sig_optical > 0, "readout.p_sig_optical", "optical powers must be > 0"),
        (len(s.sig_powers) >= 3, "sweep.sig_powers", "need at least three power steps"),
        (max(s.sig_powers) - min(s.sig_powers) >= 10, "sweep.sig_powers", "must span >= 10 dB"),
        (s.beatnote > 0, "sweep.beatnote", "must be > 0"),
        (len(s.beatnotes) >= 4 and min(s.beatnotes) > 0, "sweep.beatnotes", "need >= 4 positive beatnotes"),
        (s.repetitions >= 1, "sweep.repetitions", "must be >= 1"),
        (len(s.cal_powers) >= 3, "sweep.cal_powers", "need at least three calibration powers"),
        (s.noise_f_max > s.noise_f_min > 0, "sweep.noise_f_max", "must exceed noise_f_min > 0"),
        (m.count >= 1, "modem.count", "must be >= 1"),
        (m.symbol_rate > 0, "modem.symbol_rate", "must be > 0"),
        (m.pulse in ("rc", "nrz"), "modem.pulse", "must be 'rc' or 'nrz'"),
        (0 <= m.rolloff < 1, "modem.rolloff", "must be in [0, 1)"),
        (m.sweep in ("beatnote", "symbol_rate"), "modem.sweep", "must be 'beatnote' or 'symbol_rate'"),
        (m.n_seeds >= 1 and m.traces_per_point >= 1, "modem.n_seeds", "must be >= 1"),
        (m.mixer_bandwidth > 0, "modem.mixer_bandwidth", "must be > 0"),
    ]
    for ok, name, msg in checks:
        if not ok:
            raise ConfigError(f"{name} {msg}", field=name)
    return cfg


def load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return data


def parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, pairs):
    """Apply ``block.key=value`` strings (values parsed as JSON when possible)."""
    data = copy.deepcopy(data)
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {pair!r} is not key=value", field=pair)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key} descends into a non-block", field=key)
        node[parts[-1]] = parse_value(value.strip())
    return data


def default_dict(seed=0):
    d = ScenarioConfig(seed=seed).to_dict()
    return d
