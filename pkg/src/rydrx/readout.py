"""Photodetector trace synthesis for RF-heterodyne / optical-homodyne readout.

The atoms act as a down-mixer: a weak RF signal beating against a strong RF
LO modulates the probe transmission at the beatnote. The atomic response is
a first-order low-pass in the beat frequency; detector-referred noise is
added after it.

Electrical powers use a 50 ohm reference: ``P[mW] = 1e3 * V_rms**2 / 50``.
"""

from dataclasses import dataclass, asdict
import math
import warnings

import numpy as np
from scipy import fft as sfft

from .errors import ParameterError, SamplingError
from . import io

R_LOAD = 50.0
TWO_PI = 2.0 * math.pi
#: Rabi-contribution weight of the sensor corner; calibrated so the default
#: scenario's sensitivity-doubling frequency lands at 8 MHz (see
#: ``characterize.calibrate_kappa``).
DEFAULT_KAPPA = 0.0915


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw, floor_dbm=-200.0):
    mw = np.asarray(mw, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(mw)
    return np.maximum(out, floor_dbm)


def vrms2_to_mw(v2):
    """Mean-square volts across the reference load to mW."""
    return 1e3 * np.asarray(v2) / R_LOAD


def psd_mw_to_v2(psd_mw_per_hz):
    return np.asarray(psd_mw_per_hz) * R_LOAD / 1e3


@dataclass(frozen=True)
class NoiseModel:
    """Detector-referred one-sided noise PSD.

    PSD(f) = white * (1 + corner / f) + shot * optical_power + floor, summed
    in linear units. Levels are dBm/Hz; ``-inf`` switches a term off.
    """

    white_psd: float = -83.0
    one_over_f_corner: float = 1e3
    shot_coefficient: float = -125.0
    detector_floor: float = -130.0
    optical_power: float = 1.0  # mW on the detector (homodyne LO)

    def __post_init__(self):
        if self.one_over_f_corner < 0 or self.optical_power < 0:
            raise ParameterError("noise corners and optical power must be >= 0")
        for name in ("white_psd", "shot_coefficient", "detector_floor"):
            v = getattr(self, name)
            if math.isnan(v) or v == math.inf:
                raise ParameterError(f"{name} must be a finite dB level or -inf")

    @classmethod
    def silent(cls):
        off = -math.inf
        return cls(white_psd=off, one_over_f_corner=0.0, shot_coefficient=off, detector_floor=off)

    def components(self, f):
        """Per-source PSD in mW/Hz: probe-laser, shot, detector."""
        f = np.asarray(f, dtype=float)
        with np.errstate(divide="ignore"):
            shape = 1.0 + np.where(f > 0, self.one_over_f_corner / np.where(f > 0, f, 1.0), 0.0)
        laser = dbm_to_mw(self.white_psd) * shape
        shot = dbm_to_mw(self.shot_coefficient) * self.optical_power * np.ones_like(f)
        det = dbm_to_mw(self.detector_floor) * np.ones_like(f)
        return {"probe_laser": laser, "shot": shot, "detector": det}

    def psd(self, f):
        """Total PSD in mW/Hz."""
        c = self.components(f)
        return c["probe_laser"] + c["shot"] + c["detector"]

    def only(self, source):
        """Copy with every source but ``source`` switched off."""
        off = -math.inf
        keep = {
            "probe_laser": dict(shot_coefficient=off, detector_floor=off),
            "shot": dict(white_psd=off, one_over_f_corner=0.0, detector_floor=off),
            "detector": dict(white_psd=off, one_over_f_corner=0.0, shot_coefficient=off),
        }[source]
        return NoiseModel(**{**asdict(self), **keep})

    @property
    def is_silent(self):
        return not np.any(self.psd(np.array([1.0, 1e6])) > 0)


@dataclass(frozen=True)
class RFDrive:
    lo_power: float = -4.0  # dBm
    sig_power: float = -50.0  # dBm
    f_lo: float = 17.041e9
    f_sig: float = 17.041e9 + 100e3
    modulation: np.ndarray | None = None
    modulation_rate: float | None = None
    phase: float = 0.0

    @property
    def beatnote(self):
        return abs(self.f_sig - self.f_lo)

    def with_beatnote(self, f_b):
        return RFDrive(self.lo_power, self.sig_power, self.f_lo, self.f_lo + f_b,
                       self.modulation, self.modulation_rate, self.phase)


@dataclass(frozen=True)
class SensorBandwidth:
    corner: float  # Hz

    def response(self, f):
        """Complex first-order low-pass response at frequency ``f``."""
        return 1.0 / (1.0 + 1j * np.asarray(f, dtype=float) / self.corner)

    def gain(self, f):
        return np.abs(self.response(f))


@dataclass
class TimeTrace:
    samples: np.ndarray
    sample_rate: float
    duration: float
    seed: int | None = None
    status: str = "ok"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.size != round(self.duration * self.sample_rate):
            raise ParameterError("trace length must equal round(duration * sample_rate)")
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("trace samples must be finite")

    @property
    def times(self):
        return np.arange(self.samples.size) / self.sample_rate

    def header(self):
        return {"sample_rate": self.sample_rate, "duration": self.duration,
                "seed": self.seed, "n_samples": int(self.samples.size), "status": self.status}

    def save(self, path):
        return io.write_binary_trace(path, self.samples, self.header())

    @classmethod
    def load(cls, path):
        header, samples = io.read_binary_trace(path)
        return cls(samples, header["sample_rate"], header["duration"], header.get("seed"),
                   header.get("status", "ok"))

    def to_csv(self, path):
        rows = zip(self.times.tolist(), self.samples.tolist())
        return io.write_csv(path, ["time_s", "volts"], rows, self.header())


def sensor_bandwidth(system, kappa=DEFAULT_KAPPA):
    """Response corner ``(gamma_t + kappa * omega_c**2 / gamma_e) / 2 pi``."""
    system.validate()
    if kappa < 0:
        raise ParameterError("kappa must be >= 0")
    return SensorBandwidth((system.gamma_t + kappa * system.omega_c**2 / system.gamma_e) / TWO_PI)


def homodyne_gain(p_lo_optical, p_sig_optical, override=None):
    """Amplitude gain of balanced optical homodyne, ``2 sqrt(P_lo / P_sig)``."""
    if not (p_lo_optical > 0 and p_sig_optical > 0):
        raise ParameterError("optical powers must be > 0")
    if override is not None:
        return float(override)
    return 2.0 * math.sqrt(p_lo_optical / p_sig_optical)


def field_from_power(power_dbm, cal):
    """Field magnitude (V/m) at the cell for a generator power, ``cal * sqrt(P_mW)``."""
    return cal * np.sqrt(dbm_to_mw(power_dbm))


def colored_noise(n, fs, psd_func, rng):
    """Real Gaussian noise whose one-sided PSD (V^2/Hz) follows ``psd_func``.

    White unit-variance samples are shaped in the frequency domain by
    ``sqrt(PSD * fs / 2)``. The DC bin reuses the first non-zero bin's value.
    """
    white = rng.standard_normal(n)
    spec = sfft.rfft(white)
    f = sfft.rfftfreq(n, 1.0 / fs)
    target = np.empty_like(f)
    target[1:] = psd_func(f[1:])
    target[0] = target[1] if n > 1 else psd_func(np.array([fs]))[0]
    spec *= np.sqrt(target * fs / 2.0)
    return sfft.irfft(spec, n)


def _apply_response(x, fs, response):
    spec = sfft.rfft(x)
    spec *= response(sfft.rfftfreq(x.size, 1.0 / fs))
    return sfft.irfft(spec, x.size)


def _envelope_at(drive, t):
    m = np.asarray(drive.modulation)
    rate = drive.modulation_rate
    idx = np.minimum((t * rate + 1e-9).astype(np.int64), m.size - 1)
    return m[idx]


def synthesize_trace(responsivity, bandwidth, drive, noise, homodyne_gain, cal, duration, fs,
                     rng_seed, detector_gain=1.0, response=None):
    """Synthesize one photodetector record.

    Parameters
    ----------
    responsivity : float
        dT/dE at the LO bias (per V/m).
    bandwidth : SensorBandwidth
        First-order atomic response; ignored when ``response`` is given.
    drive : RFDrive
        LO/signal powers and frequencies; optional complex unit-RMS
        envelope in ``drive.modulation`` sampled at ``drive.modulation_rate``.
    noise : NoiseModel
    homodyne_gain : float
    cal : float
        Field calibration, V/m per sqrt(mW).
    duration, fs : float
    rng_seed : int or numpy SeedSequence
    detector_gain : float
        Volts per unit transmission change before homodyne gain.
    response : callable, optional
        Replacement complex frequency response (used for the mixer reference).
    """
    if not (fs > 0 and duration > 0):
        raise SamplingError("fs and duration must be > 0")
    f_b = drive.beatnote
    if f_b <= 0:
        raise SamplingError("heterodyne output requires a non-zero beatnote")
    if not fs > 4 * f_b:
        raise SamplingError(f"fs={fs} must exceed 4x beatnote={4 * f_b}")
    n = round(duration * fs)
    if n < 2:
        raise SamplingError("duration * fs must be >= 2")
    response = response or bandwidth.response
    rng = np.random.default_rng(rng_seed)
    t = np.arange(n) / fs

    e_sig = float(field_from_power(drive.sig_power, cal))
    amp = homodyne_gain * responsivity * e_sig * detector_gain
    status = "ok"
    if responsivity == 0:
        status = "degenerate-signal"
        warnings.warn("zero responsivity: trace carries no signal", RuntimeWarning, stacklevel=2)

    if drive.modulation is None:
        h = complex(response(f_b))
        signal = amp * np.abs(h) * np.cos(TWO_PI * f_b * t + drive.phase + np.angle(h))
    else:
        env = _envelope_at(drive, t)
        beat = amp * np.real(env * np.exp(1j * (TWO_PI * f_b * t + drive.phase)))
        signal = _apply_response(beat, fs, response)

    if noise.is_silent:
        samples = signal
    else:
        samples = signal + colored_noise(n, fs, lambda f: psd_mw_to_v2(noise.psd(f)), rng)
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return TimeTrace(samples, fs, n / fs, seed=seed, status=status)
