"""QPSK generation, the digitizer demodulation chain, and EVM."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import fft as sfft

from .errors import ParameterError, SamplingError, SyncError, InputError
from .dsp import mix_to_baseband, brickwall_lowpass
from .readout import synthesize_trace, SensorBandwidth
from . import io

NOMINAL = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
CUTOFF_FACTOR = 2.1
DEFAULT_ROLLOFF = 0.35
PRBS9_PERIOD = 511


@dataclass
class SymbolStream:
    symbols: np.ndarray
    symbol_rate: float

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.ndim != 1 or self.symbols.size < 1:
            raise InputError("a stream needs at least one symbol")
        if np.any((self.symbols < 0) | (self.symbols > 3)):
            raise InputError("symbols must be in {0, 1, 2, 3}")
        if not self.symbol_rate > 0:
            raise ParameterError("symbol_rate must be > 0")

    @property
    def count(self):
        return int(self.symbols.size)

    @property
    def duration(self):
        return self.count / self.symbol_rate

    @property
    def points(self):
        return NOMINAL[self.symbols]


@dataclass
class IQConstellation:
    measured: np.ndarray
    labels: np.ndarray
    nominal: np.ndarray = field(default_factory=lambda: NOMINAL.copy())
    iq_swap: bool = True  # I = imag, Q = real

    def __post_init__(self):
        self.measured = np.asarray(self.measured, dtype=complex)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.measured.shape != self.labels.shape:
            raise InputError("one label per measured point")
        if not np.all(np.isfinite(self.measured)):
            raise InputError("measured points must be finite")
        if np.any((self.labels < 0) | (self.labels >= self.nominal.size)):
            raise InputError("labels must index the nominal constellation")

    def iq(self, z):
        z = np.asarray(z)
        return (z.imag, z.real) if self.iq_swap else (z.real, z.imag)

    def to_csv(self, path, metadata=None):
        i_m, q_m = self.iq(self.measured)
        i_n, q_n = self.iq(self.nominal[self.labels])
        rows = zip(range(self.labels.size), self.labels.tolist(), i_m.tolist(), q_m.tolist(),
                   i_n.tolist(), q_n.tolist())
        return io.write_csv(path, ["symbol_index", "label", "i_meas", "q_meas", "i_nom", "q_nom"],
                            rows, {"iq_swap": self.iq_swap, **(metadata or {})})


@dataclass
class EVMReport:
    evm_rms: float
    per_symbol_error: np.ndarray
    symbol_rate: float = float("nan")
    beatnote: float = float("nan")

    def record(self):
        return {
            "evm_rms_percent": self.evm_rms,
            "symbol_rate_hz": self.symbol_rate,
            "beatnote_hz": self.beatnote,
            "n_symbols": int(np.size(self.per_symbol_error)),
            "max_error": float(np.max(self.per_symbol_error)) if np.size(self.per_symbol_error) else 0.0,
        }


def prbs9(length=PRBS9_PERIOD, state=0x1FF):
    """Bits of the x^9 + x^5 + 1 maximal-length sequence (period 511)."""
    if not 0 < state < 512:
        raise ParameterError("PRBS9 seed state must be a non-zero 9-bit value")
    bits = np.empty(length, dtype=np.int64)
    for i in range(length):
        new = ((state >> 8) ^ (state >> 4)) & 1
        bits[i] = state & 1
        state = ((state << 1) | new) & 0x1FF
    return bits


def generate_symbols(count=PRBS9_PERIOD, rng_seed=None, prbs=False, symbol_rate=100e3, offset=1):
    """Symbol source: PRBS9 bit pairs or seeded uniform draws.

    In PRBS mode symbol ``k`` is ``2 b[k] + b[k + offset]`` over the cyclic
    511-bit sequence, so one period yields all four symbols.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    if prbs:
        bits = prbs9()
        k = np.arange(count) % PRBS9_PERIOD
        symbols = 2 * bits[k] + bits[(k + offset) % PRBS9_PERIOD]
    else:
        symbols = np.random.default_rng(rng_seed).integers(0, 4, count)
    return SymbolStream(symbols, symbol_rate)


def raised_cosine_spectrum(f, symbol_rate, rolloff):
    """Raised-cosine pulse spectrum normalized to unit pulse peak."""
    T = 1.0 / symbol_rate
    af = np.abs(np.asarray(f, dtype=float))
    lo = (1 - rolloff) / (2 * T)
    hi = (1 + rolloff) / (2 * T)
    out = np.where(af <= lo, T, 0.0)
    if rolloff > 0:
        band = (af > lo) & (af <= hi)
        out = np.where(band, T / 2 * (1 + np.cos(np.pi * T / rolloff * (af - lo))), out)
    return out


def _pulse_train(stream, fs, n, pulse, rolloff):
    t = np.arange(n) / fs
    pts = stream.points
    if pulse == "nrz":
        idx = np.minimum((t * stream.symbol_rate + 1e-9).astype(np.int64), stream.count - 1)
        return pts[idx]
    # periodic Fourier series of sum_k a_k p(t - (k + 1/2) T) over one stream period
    period = stream.duration
    f = sfft.fftfreq(n, 1.0 / fs)
    j = np.rint(f * period).astype(np.int64)
    A = sfft.fft(pts)
    coef = raised_cosine_spectrum(f, stream.symbol_rate, rolloff) / period
    coef = coef * A[j % stream.count] * np.exp(-1j * np.pi * j / stream.count)
    return sfft.ifft(coef) * n


def qpsk_modulate(stream, f_carrier, fs, pulse="rc", rolloff=DEFAULT_ROLLOFF):
    """QPSK envelope and real passband waveform.

    Symbol ``s`` maps to phase ``45 + 90 s`` degrees. ``pulse='rc'`` uses a
    raised-cosine Nyquist pulse built periodically over the stream, so the
    spectrum stays inside ``(1 + rolloff) R / 2`` and a noiseless receiver
    sees no intersymbol interference at symbol centres; ``pulse='nrz'``
    holds each symbol for its full period.

    Returns
    -------
    envelope : ndarray of complex, unit RMS
    passband : ndarray of float, ``sqrt(2) Re{envelope exp(i 2 pi f_c t)}``
    """
    if pulse not in ("rc", "nrz"):
        raise ParameterError("pulse must be 'rc' or 'nrz'")
    if not 0 <= rolloff < 1:
        raise ParameterError("rolloff must be in [0, 1)")
    if not fs > 2 * (f_carrier + stream.symbol_rate):
        raise SamplingError("fs must exceed 2 (f_carrier + symbol_rate)")
    if fs / stream.symbol_rate < 8:
        raise SamplingError("need at least 8 samples per symbol")
    n = round(stream.duration * fs)
    env = _pulse_train(stream, fs, n, pulse, rolloff)
    env = env / np.sqrt(np.mean(np.abs(env) ** 2))
    t = np.arange(n) / fs
    passband = math.sqrt(2) * np.real(env * np.exp(2j * np.pi * f_carrier * t))
    return env, passband


def symbol_centres(stream, t0=0.0):
    """Symbol-centre instants in seconds."""
    return t0 + (np.arange(stream.count) + 0.5) / stream.symbol_rate


def sample_bandlimited(baseband, times, cutoff=None):
    """Evaluate a periodic band-limited record at arbitrary instants.

    Uses the record's own DFT coefficients within ``|f| <= cutoff`` (all bins
    when omitted), so the result is exact for signals confined to that band,
    e.g. the output of ``brickwall_lowpass``.
    """
    x = baseband.samples
    n = x.size
    spec = sfft.fft(x) / n
    f = sfft.fftfreq(n, 1.0 / baseband.sample_rate)
    keep = np.arange(n) if cutoff is None else np.nonzero(np.abs(f) <= cutoff)[0]
    out = np.empty(len(times), dtype=complex)
    for start in range(0, len(times), 256):
        t = np.asarray(times[start:start + 256])[:, None]
        out[start:start + 256] = np.exp(2j * np.pi * f[keep][None, :] * t) @ spec[keep]
    return out


def demodulate(trace, beatnote, stream, t0=0.0, cutoff_factor=CUTOFF_FACTOR, iq_swap=True):
    """Recover per-symbol constellation points from a photodetector record.

    Mix the beatnote to DC, brick-wall low-pass at ``cutoff_factor`` times
    the symbol rate, sample at symbol centres, then fit a single complex
    gain (least squares over all symbols) onto the transmitted nominal
    points. ``stream`` supplies the reference symbols; ``t0`` is the start
    of the first symbol in the record.
    """
    fs = trace.sample_rate
    centres = symbol_centres(stream, t0)
    span = trace.samples.size / fs
    if t0 < 0 or t0 + stream.duration > span * (1 + 1e-9):
        raise SyncError(
            f"{stream.count} symbols at {stream.symbol_rate} Bd from t0={t0} s do not fit "
            f"in a {span:.6g} s record"
        )
    bb = mix_to_baseband(trace, beatnote)
    cutoff = cutoff_factor * stream.symbol_rate
    lp = brickwall_lowpass(bb, cutoff)
    raw = sample_bandlimited(lp, centres, cutoff)
    ref = stream.points
    denom = np.vdot(raw, raw)
    if denom == 0:
        raise SyncError("record has no energy at the symbol instants")
    gain = np.vdot(raw, ref) / denom
    return IQConstellation(gain * raw, stream.symbols, iq_swap=iq_swap)


def evm(constellation, symbol_rate=float("nan"), beatnote=float("nan")):
    """RMS error-vector magnitude in percent of the RMS nominal radius."""
    if constellation.labels.size < 1:
        raise InputError("EVM needs at least one symbol")
    nominal = constellation.nominal[constellation.labels]
    err = np.abs(constellation.measured - nominal)
    ref = np.sqrt(np.mean(np.abs(nominal) ** 2))
    return EVMReport(100.0 * np.sqrt(np.mean(err**2)) / ref, err, symbol_rate, beatnote)


class FlatMixerResponse:
    """Unity gain to ``corner`` then first-order roll-off (phase-free)."""

    def __init__(self, corner):
        if not corner > 0:
            raise ParameterError("mixer_bandwidth must be > 0")
        self.corner = corner

    def __call__(self, f):
        f = np.abs(np.asarray(f, dtype=float))
        return np.where(f <= self.corner, 1.0, self.corner / np.maximum(f, self.corner))


def reference_mixer_channel(drive, mixer_bandwidth, noise, fs, duration, rng_seed,
                            gain=1.0, cal=1.0, detector_gain=1.0):
    """Conventional RF-mixer reception with the same noise pipeline.

    ``gain`` plays the role of ``homodyne_gain * responsivity`` so a paired
    atomic run and mixer run can deliver the same low-frequency signal level.
    """
    return synthesize_trace(gain, SensorBandwidth(mixer_bandwidth), drive, noise, 1.0, cal,
                            duration, fs, rng_seed, detector_gain=detector_gain,
                            response=FlatMixerResponse(mixer_bandwidth))
