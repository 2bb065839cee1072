"""Spectral estimation and baseband primitives."""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import signal as sps
from scipy import stats

from .errors import InputError, SamplingError, ParameterError
from .readout import vrms2_to_mw, mw_to_dbm
from . import io

GUARD_FLOOR_DBM = -200.0
HANN_ENBW = 1.5  # equivalent noise bandwidth of a Hann window, in bins
ANNULUS = (5.0, 100.0)  # noise annulus around the signal, in rbw units
DETECTION_THRESHOLD_DB = 6.0


@dataclass
class PowerSpectrum:
    axis: np.ndarray
    values: np.ndarray  # dBm per rbw
    rbw: float
    n_averages: int = 1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.shape != self.values.shape:
            raise InputError("axis and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise InputError("spectrum values must be finite")
        if self.axis.size > 1 and np.max(np.diff(self.axis)) > self.rbw * (1 + 1e-9):
            raise InputError("bin spacing exceeds the resolution bandwidth")

    @property
    def linear(self):
        """Power per bin in mW."""
        return 10.0 ** (self.values / 10.0)

    def integrated_power(self):
        """Total power (mW); each bin overlaps its neighbours by the window ENBW."""
        return float(self.linear.sum() / HANN_ENBW)

    def to_csv(self, path, extra=None):
        meta = {"rbw": self.rbw, "n_averages": int(self.n_averages), **self.metadata, **(extra or {})}
        return io.write_csv(path, ["frequency_hz", "power_dbm"],
                            zip(self.axis.tolist(), self.values.tolist()), meta)

    @classmethod
    def from_csv(cls, path):
        meta, _, data = io.read_csv(path)
        rbw = meta.pop("rbw")
        n = meta.pop("n_averages", 1)
        return cls(np.array(data["frequency_hz"]), np.array(data["power_dbm"]), rbw, int(n), meta)


@dataclass
class ComplexBaseband:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if not np.all(np.isfinite(self.samples)):
            raise InputError("baseband samples must be finite")


def segment_length(fs, rbw):
    """Hann segment length whose equivalent noise bandwidth equals ``rbw``."""
    return int(round(HANN_ENBW * fs / rbw))


def periodogram(traces, rbw, floor_dbm=GUARD_FLOOR_DBM):
    """Averaged Hann-windowed power spectrum with resolution bandwidth ``rbw``.

    Each trace is split into 50 %-overlapping segments whose equivalent noise
    bandwidth is ``rbw`` (bin spacing ``rbw / 1.5``). Bins report power in
    dBm: a bin-centred tone reads its mean-square power and white noise
    reads ``PSD * rbw``. Traces are reduced in list order.

    Each trace's spectrum is rescaled so that its integrated power equals
    the trace mean-square exactly. The Welch sum only matches it up to the
    segment-to-segment scatter; bin ratios (SNR) are unaffected.
    """
    traces = list(traces)
    if not traces:
        raise InputError("at least one trace is required")
    fs = traces[0].sample_rate
    n = traces[0].samples.size
    for tr in traces[1:]:
        if tr.sample_rate != fs or tr.samples.size != n:
            raise InputError("all traces must share sample rate and length")
    if not rbw > 0:
        raise ParameterError("rbw must be > 0")
    nperseg = segment_length(fs, rbw)
    if nperseg > n:
        raise SamplingError(
            f"rbw={rbw} Hz needs {nperseg} samples per segment; traces have {n}"
        )
    acc = None
    segments = 0
    for tr in traces:
        f, p = sps.welch(tr.samples, fs=fs, window="hann", nperseg=nperseg,
                         noverlap=nperseg // 2, detrend=False, scaling="spectrum")
        total = p.sum() / HANN_ENBW
        if total > 0:
            p = p * (np.mean(tr.samples**2) / total)
        acc = p if acc is None else acc + p
        segments += max(1, (n - nperseg) // (nperseg - nperseg // 2) + 1)
    mean_v2 = acc / len(traces)
    values = mw_to_dbm(vrms2_to_mw(mean_v2), floor_dbm)
    return PowerSpectrum(f, values, rbw, n_averages=segments,
                         metadata={"fs": fs, "n_traces": len(traces), "floor_dbm": floor_dbm})


def median_bias(n_averages):
    """Ratio median/mean of a bin power averaged over ``n_averages`` spectra."""
    k = 2 * max(int(n_averages), 1)
    return stats.chi2.median(k) / k


@dataclass(frozen=True)
class SNRResult:
    snr_db: float
    signal_dbm: float
    noise_dbm: float
    detected: bool

    def __float__(self):
        return self.snr_db


def snr_at(spectrum, f_signal, noise_exclusion=None, threshold_db=DETECTION_THRESHOLD_DB,
           floor_dbm=GUARD_FLOOR_DBM):
    """Signal-to-noise ratio of a tone in a power spectrum.

    Signal is the peak bin within +-rbw of ``f_signal``. Noise is the median
    of the bins in the annulus ``[5 rbw, 100 rbw]`` (inner edge widened to
    ``noise_exclusion`` when given), corrected from median to mean for the
    chi-square statistics of ``n_averages`` averaged spectra.
    """
    ax = spectrum.axis
    rbw = spectrum.rbw
    if not (ax[0] <= f_signal <= ax[-1]):
        raise InputError("f_signal outside the spectrum axis")
    inner = ANNULUS[0] * rbw if noise_exclusion is None else max(noise_exclusion, rbw)
    outer = max(ANNULUS[1] * rbw, 2 * inner)
    if 2 * inner >= ax[-1] - ax[0]:
        raise InputError("noise exclusion window is wider than the spectrum span")
    dist = np.abs(ax - f_signal)
    sig_bins = dist <= rbw
    if not np.any(sig_bins):
        sig_bins = dist == dist.min()
    signal = float(np.max(spectrum.values[sig_bins]))
    annulus = (dist >= inner) & (dist <= outer)
    if np.count_nonzero(annulus) < 3:
        raise InputError("noise annulus contains fewer than three bins")
    lin = 10.0 ** (spectrum.values[annulus] / 10.0)
    noise_mw = np.median(lin) / median_bias(spectrum.n_averages)
    noise = float(mw_to_dbm(noise_mw, floor_dbm))
    snr = signal - noise
    detected = signal > floor_dbm and snr >= threshold_db
    return SNRResult(snr, signal, noise, bool(detected))


def mix_to_baseband(trace, f_mix):
    """Multiply by ``exp(-i 2 pi f_mix t)``; no filtering."""
    fs = trace.sample_rate
    if not (0 <= abs(f_mix) < fs / 2):
        raise SamplingError("mixing frequency must be below Nyquist")
    t = np.arange(trace.samples.size) / fs
    return ComplexBaseband(trace.samples * np.exp(-2j * np.pi * f_mix * t), fs)


def brickwall_lowpass(baseband, cutoff):
    """Zero every FFT bin with ``|f| > cutoff`` (bins at the edge are kept)."""
    fs = baseband.sample_rate
    if not (0 < cutoff < fs / 2):
        raise ParameterError("cutoff must lie in (0, fs/2)")
    spec = sfft.fft(baseband.samples)
    f = sfft.fftfreq(baseband.samples.size, 1.0 / fs)
    spec[np.abs(f) > cutoff] = 0.0
    return ComplexBaseband(sfft.ifft(spec), fs)
