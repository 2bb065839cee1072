"""Measurement procedures: sensitivity sweeps, bandwidth, AT calibration, EVM campaigns.

Every stochastic step draws from ``numpy.random.SeedSequence`` entropy built
from the scenario seed plus a tuple tag naming the campaign point, so
results do not depend on evaluation order.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import ndimage, optimize, signal as sps, stats
from scipy.optimize import brentq

from .errors import (InputError, FitError, OutOfRangeError, ResolutionError, ConfigError,
                     ParameterError)
from . import spectro, readout, dsp, modem
from .readout import RFDrive, dbm_to_mw

TWO_PI = 2.0 * math.pi
D32_SEPARATION = 92e6  # Hz, 50D5/2 -> 50D3/2


def seed_for(seed, *tag):
    """Deterministic child seed for a tagged campaign point."""
    return np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(t) for t in tag]])


# --------------------------------------------------------------------------
# Sensitivity (power sweep extrapolated to the noise floor)
# --------------------------------------------------------------------------

@dataclass
class SensitivityResult:
    sensitivity: float  # V/m/sqrt(Hz)
    beatnote: float
    fit_slope: float
    fit_intercept: float
    extrapolated_floor_power: float  # dBm
    stderr: float
    points: list = field(default_factory=list)
    repeat_std: float = 0.0
    repetitions: int = 1

    def __post_init__(self):
        if not self.sensitivity > 0 or self.stderr < 0:
            raise FitError("sensitivity must be > 0 with non-negative stderr")


def sensitivity_from_sweep(points, f_rbw, c_cal, beatnote=float("nan")):
    """Minimum detectable field from a (P_sig dBm, SNR dB) sweep.

    Fits ``SNR = a P + b``, extrapolates to SNR = 0 dB at ``P0 = -b / a``
    and returns ``S = sqrt(10**(P0/10) / f_rbw) * c_cal``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise InputError("need at least three (power, snr) points")
    if not (f_rbw > 0 and c_cal > 0):
        raise ParameterError("f_rbw and c_cal must be > 0")
    p, snr = pts[:, 0], pts[:, 1]
    if np.ptp(snr) < 10:
        raise InputError("SNR values must span at least 10 dB")
    X = np.column_stack([p, np.ones_like(p)])
    coef, *_ = np.linalg.lstsq(X, snr, rcond=None)
    a, b = coef
    if not a > 0:
        raise FitError(f"non-positive SNR-vs-power slope {a:.4g}")
    p0 = -b / a
    s = math.sqrt(dbm_to_mw(p0) / f_rbw) * c_cal
    dof = len(p) - 2
    resid = snr - X @ coef
    if dof > 0:
        cov = np.linalg.inv(X.T @ X) * (resid @ resid) / dof
        grad = np.array([b / a**2, -1.0 / a])
        var_p0 = float(grad @ cov @ grad)
    else:
        var_p0 = 0.0
    stderr = s * math.log(10) / 20 * math.sqrt(max(var_p0, 0.0))
    return SensitivityResult(s, beatnote, float(a), float(b), float(p0), stderr,
                             points=[tuple(map(float, r)) for r in pts])


def _sampling(f_b, rbw, fs_factor):
    """Sample rate and record length putting ``f_b`` on a bin centre."""
    df = rbw / dsp.HANN_ENBW
    nper = int(math.ceil(fs_factor * f_b / df))
    fs = nper * df
    return fs, nper / fs


@dataclass
class Receiver:
    """Everything a trace needs that follows from the scenario."""

    responsivity: float
    bandwidth: readout.SensorBandwidth
    gain: float
    cal: float
    detector_gain: float
    lo_power: float
    f_lo: float

    def drive(self, sig_power, beatnote, **kw):
        return RFDrive(self.lo_power, sig_power, self.f_lo, self.f_lo + beatnote, **kw)


def build_receiver(cfg, system=None):
    system = system or cfg.system()
    r = cfg.readout
    e_lo = float(readout.field_from_power(r.lo_power, r.c_cal))
    resp = spectro.small_signal_responsivity(system, e_lo, cfg.dipole)
    return Receiver(
        responsivity=resp,
        bandwidth=readout.sensor_bandwidth(system, r.kappa),
        gain=readout.homodyne_gain(r.p_lo_optical, r.p_sig_optical, r.homodyne_override),
        cal=r.c_cal,
        detector_gain=r.detector_gain,
        lo_power=r.lo_power,
        f_lo=r.f_lo,
    )


def measure_sweep(cfg, receiver, beatnote, rbw, tag=(), noise=None):
    """Power sweep at one beatnote: list of (P_sig, SNR) with trace-averaged spectra."""
    noise = noise or cfg.noise
    fs, duration = _sampling(beatnote, rbw, cfg.readout.fs_factor)
    points = []
    for i, p_sig in enumerate(cfg.sweep.sig_powers):
        traces = [
            readout.synthesize_trace(receiver.responsivity, receiver.bandwidth,
                                     receiver.drive(p_sig, beatnote), noise, receiver.gain,
                                     receiver.cal, duration, fs,
                                     seed_for(cfg.seed, *tag, i, k),
                                     detector_gain=receiver.detector_gain)
            for k in range(cfg.readout.traces_per_point)
        ]
        spec = dsp.periodogram(traces, rbw)
        res = dsp.snr_at(spec, beatnote)
        if res.detected:
            points.append((float(p_sig), res.snr_db))
    return points


def measure_sensitivity(cfg, beatnote=None, rbw=None, receiver=None, repetitions=None, tag=0,
                        noise=None):
    """Sensitivity at one beatnote, repeated ``repetitions`` times.

    The returned value is the mean over repetitions; ``repeat_std`` is the
    sample standard deviation (zero for one repetition).
    """
    beatnote = cfg.sweep.beatnote if beatnote is None else beatnote
    rbw = cfg.readout.rbw if rbw is None else rbw
    receiver = receiver or build_receiver(cfg)
    reps = cfg.sweep.repetitions if repetitions is None else repetitions
    results = []
    for rep in range(reps):
        pts = measure_sweep(cfg, receiver, beatnote, rbw, tag=(tag, rep), noise=noise)
        if len(pts) < 3:
            raise FitError(f"only {len(pts)} detected power steps at beatnote {beatnote:g} Hz")
        results.append(sensitivity_from_sweep(pts, rbw, cfg.readout.c_cal, beatnote))
    vals = np.array([r.sensitivity for r in results])
    first = results[0]
    return SensitivityResult(
        float(vals.mean()), beatnote, first.fit_slope, first.fit_intercept,
        first.extrapolated_floor_power, first.stderr, points=first.points,
        repeat_std=float(vals.std(ddof=1)) if reps > 1 else 0.0, repetitions=reps,
    )


def sensitivity_vs_beatnote(cfg, beatnotes=None, rbw=None, repetitions=None, system=None,
                            noise=None):
    """Sensitivity curve over beatnotes (default: the scenario's bandwidth sweep)."""
    beatnotes = list(cfg.sweep.beatnotes if beatnotes is None else beatnotes)
    rbw = cfg.sweep.bandwidth_rbw if rbw is None else rbw
    if any(b <= 0 for b in beatnotes):
        raise InputError("beatnotes must be positive")
    receiver = build_receiver(cfg, system)
    return [measure_sensitivity(cfg, b, rbw, receiver, repetitions, tag=i, noise=noise)
            for i, b in enumerate(beatnotes)]


# --------------------------------------------------------------------------
# Bandwidth
# --------------------------------------------------------------------------

@dataclass
class BandwidthResult:
    f_3db: float
    s_low: float
    method: str = "sensitivity-doubling"
    f_amplitude_3db: float = float("nan")

    def __post_init__(self):
        if not self.f_3db > 0:
            raise OutOfRangeError("f_3db must be > 0")


def crossing(x, y, factor, ref=None, start=0):
    """First log-log interpolated ``x`` beyond index ``start`` where ``y >= factor * ref``.

    ``ref`` defaults to ``y[start]`` after sorting by ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    target = factor * (y[start] if ref is None else ref)
    above = np.nonzero(y >= target)[0]
    above = above[above > start]
    if above.size == 0:
        raise OutOfRangeError(f"curve never reaches {factor:g}x its low-frequency value")
    i = above[0]
    lx, ly = np.log(x[i - 1:i + 1]), np.log(y[i - 1:i + 1])
    if ly[1] == ly[0]:
        return float(x[i])
    frac = (math.log(target) - ly[0]) / (ly[1] - ly[0])
    return float(math.exp(lx[0] + frac * (lx[1] - lx[0])))


def _baseline(y):
    """Index and value of the in-band floor: min of the 3-point running median."""
    m = ndimage.median_filter(np.asarray(y, dtype=float), size=3, mode="nearest")
    k = int(np.argmin(m))
    return k, float(m[k])


def extract_bandwidth(curve):
    """Beatnote at which the minimum detectable field doubles.

    ``curve`` is a sequence of SensitivityResult (or (beatnote, S) pairs).
    The baseline ``s_low`` is the minimum of the 3-point running median, so
    1/f excess at the lowest beatnotes does not inflate it and a single low
    outlier does not deflate it; on a monotonic curve it is the
    lowest-beatnote value. Also
    reports where S grows by sqrt(2) (a 3 dB drop in beat power).
    """
    pairs = [(c.beatnote, c.sensitivity) if isinstance(c, SensitivityResult) else tuple(c)
             for c in curve]
    if len(pairs) < 4:
        raise InputError("need at least four sensitivity points")
    f, s = np.array(pairs, dtype=float).T
    order = np.argsort(f)
    f, s = f[order], s[order]
    k, s_low = _baseline(s)
    f3 = crossing(f, s, 2.0, s_low, k)
    try:
        fa = crossing(f, s, math.sqrt(2.0), s_low, k)
    except OutOfRangeError:
        fa = float("nan")
    return BandwidthResult(f3, s_low, "sensitivity-doubling", fa)


def expected_sensitivity(cfg, beatnote, rbw, receiver=None, bandwidth=None, noise=None):
    """Noise-averaged outcome of ``measure_sensitivity`` (no Monte-Carlo).

    Each sweep point's SNR is its expectation ``10 log10(S/N + 1)``: the
    signal bin also collects the noise power of that bin.
    """
    receiver = receiver or build_receiver(cfg)
    bw = bandwidth or receiver.bandwidth
    noise = noise or cfg.noise
    p = np.asarray(cfg.sweep.sig_powers, dtype=float)
    e = readout.field_from_power(p, receiver.cal)
    amp = receiver.gain * receiver.responsivity * e * receiver.detector_gain * bw.gain(beatnote)
    sig = readout.vrms2_to_mw(amp**2 / 2)
    n = noise.psd(np.array([beatnote]))[0] * rbw
    snr = 10 * np.log10(sig / n + 1.0)
    return sensitivity_from_sweep(np.column_stack([p, snr]), rbw, receiver.cal, beatnote)


def expected_bandwidth(cfg, kappa=None, beatnotes=None, rbw=None, receiver=None, noise=None):
    """``extract_bandwidth`` applied to the expected sensitivity curve."""
    receiver = receiver or build_receiver(cfg)
    kappa = cfg.readout.kappa if kappa is None else kappa
    bw = readout.sensor_bandwidth(cfg.system(), kappa)
    beatnotes = cfg.sweep.beatnotes if beatnotes is None else beatnotes
    rbw = cfg.sweep.bandwidth_rbw if rbw is None else rbw
    curve = [expected_sensitivity(cfg, f, rbw, receiver, bw, noise) for f in beatnotes]
    return extract_bandwidth(curve)


def calibrate_kappa(cfg, target_f3db=8e6):
    """Kappa placing the expected pipeline bandwidth at ``target_f3db``."""
    receiver = build_receiver(cfg)

    def miss(kappa):
        try:
            return expected_bandwidth(cfg, kappa, receiver=receiver).f_3db - target_f3db
        except OutOfRangeError:
            return target_f3db
    return float(brentq(miss, 0.0, 2.0, xtol=1e-6))


# --------------------------------------------------------------------------
# Double-Gaussian fitting and calibrations
# --------------------------------------------------------------------------

@dataclass
class DoubleGaussianFit:
    splitting: float
    stderr: float
    centers: tuple
    params: np.ndarray
    residual_rms: float


def _double_gauss(x, a1, m1, s1, a2, m2, s2, c):
    return (a1 * np.exp(-0.5 * ((x - m1) / s1) ** 2)
            + a2 * np.exp(-0.5 * ((x - m2) / s2) ** 2) + c)


def _noise_level(y):
    # white-noise sigma from the MAD of second differences
    d2 = np.diff(y, 2)
    if d2.size == 0:
        return 0.0
    return float(1.4826 * np.median(np.abs(d2 - np.median(d2))) / math.sqrt(6))


def fit_double_gaussian(curve):
    """Separation of the two dominant peaks of a spectrum.

    Two Gaussians plus a constant are fitted by nonlinear least squares,
    initialised from the two most prominent local maxima. Peaks must stand
    more than 3x the residual noise above their surroundings.
    """
    x = np.asarray(curve.axis, dtype=float)
    y = np.asarray(curve.values, dtype=float)
    if x.size < 8:
        raise ResolutionError("too few samples to resolve two peaks")
    x0, xs = x.mean(), (x[-1] - x[0]) / 2
    u = (x - x0) / xs
    noise = _noise_level(y)
    prominence = max(3 * noise, 1e-3 * np.ptp(y), 1e-12)
    peaks, props = sps.find_peaks(y, prominence=prominence, width=1)
    if peaks.size < 2:
        raise ResolutionError(f"found {peaks.size} resolvable peak(s), need two")
    top = np.argsort(props["prominences"])[::-1][:2]
    top = top[np.argsort(peaks[top])]
    base = float(np.median(y))
    dx = (u[1] - u[0])
    p0 = []
    for k in top:
        i = peaks[k]
        sigma = max(props["widths"][k] * dx / 2.355, dx)
        p0 += [y[i] - base, u[i], sigma]
    p0.append(base)
    lo = [-np.inf, -1.5, dx / 10, -np.inf, -1.5, dx / 10, -np.inf]
    hi = [np.inf, 1.5, 2.0, np.inf, 1.5, 2.0, np.inf]
    try:
        popt, pcov = optimize.curve_fit(_double_gauss, u, y, p0=p0, bounds=(lo, hi),
                                        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"double-Gaussian fit failed: {exc}") from exc
    if not np.all(np.isfinite(popt)):
        raise FitError("double-Gaussian fit diverged")
    m1, m2 = popt[1], popt[4]
    var = pcov[1, 1] + pcov[4, 4] - 2 * pcov[1, 4]
    if not np.isfinite(var):
        var = 0.0
    resid = y - _double_gauss(u, *popt)
    params = popt.copy()
    params[[1, 4]] = params[[1, 4]] * xs + x0
    params[[2, 5]] = params[[2, 5]] * xs
    return DoubleGaussianFit(abs(m2 - m1) * xs, math.sqrt(max(var, 0.0)) * xs,
                             (float(params[1]), float(params[4])), params,
                             float(np.sqrt(np.mean(resid**2))))


@dataclass
class CalibrationFit:
    c_cal: float
    slope_stderr: float
    points: list
    r_squared: float
    ci95: float = float("nan")

    def __post_init__(self):
        if not self.c_cal > 0:
            raise FitError("calibration slope must be positive")
        if not 0 <= self.r_squared <= 1:
            raise FitError("r_squared outside [0, 1]")


def calibrate_ccal(measurements, dipole):
    """Field-vs-sqrt(power) calibration slope from AT splittings.

    ``measurements`` holds ``(P_dBm, splitting_Hz)`` or
    ``(P_dBm, splitting_Hz, splitting_stderr_Hz)`` tuples. Fields follow
    ``|E| = hbar * 2 pi * splitting / d``; the zero-intercept line is fitted
    with inverse-variance weights when stderr is supplied.
    """
    rows = [tuple(m) for m in measurements]
    if len(rows) < 3:
        raise InputError("need at least three calibration points")
    p = np.array([r[0] for r in rows], dtype=float)
    split = np.array([r[1] for r in rows], dtype=float)
    if np.any(~(split > 0)):
        raise InputError("splittings must be positive")
    x = np.sqrt(dbm_to_mw(p))
    e = spectro.at_splitting_to_field(split, dipole)
    if all(len(r) > 2 and r[2] is not None and r[2] > 0 for r in rows):
        se = spectro.at_splitting_to_field(np.array([r[2] for r in rows], dtype=float), dipole)
        w = 1.0 / se**2
    else:
        w = np.ones_like(x)
    sxx = np.sum(w * x * x)
    c = float(np.sum(w * x * e) / sxx)
    resid = e - c * x
    n = len(rows)
    s2 = float(np.sum(w * resid**2) / (n - 1))
    stderr = math.sqrt(s2 / sxx)
    ss_tot = float(np.sum(w * (e - np.average(e, weights=w)) ** 2))
    r2 = 1.0 - float(np.sum(w * resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    ci = stats.t.ppf(0.975, n - 1) * stderr
    return CalibrationFit(c, stderr, list(zip(x.tolist(), e.tolist())), r2, float(ci))


@dataclass
class AxisCalibration:
    scale: float  # Hz per raw scan unit
    separation_raw: float
    stderr: float


def calibrate_frequency_axis(curve, reference=D32_SEPARATION):
    """Hz per scan unit from the D5/2 / D3/2 peak pair separated by 92 MHz."""
    fit = fit_double_gaussian(curve)
    sep = fit.splitting
    if not sep > 0:
        raise ResolutionError("reference peaks coincide")
    scale = reference / sep
    return AxisCalibration(scale, sep, scale * fit.stderr / sep)


def simulate_at_spectra(cfg, powers=None, c_cal_true=None, rng_seed=None, n_traces=None):
    """AT spectra for a list of generator powers (5-trace averaged, noisy).

    Returns a list of (P_dBm, SpectrumCurve).
    """
    s = cfg.sweep
    powers = list(s.cal_powers if powers is None else powers)
    c_true = s.cal_c_cal_true if c_cal_true is None else c_cal_true
    n_traces = cfg.readout.traces_per_point if n_traces is None else n_traces
    system = cfg.system(omega_c=TWO_PI * s.cal_omega_c)
    out = []
    for i, p in enumerate(powers):
        e = float(readout.field_from_power(p, c_true))
        split = float(spectro.field_to_splitting(e, cfg.dipole))
        half = 1.6 * split
        scan = np.linspace(-half, half, s.cal_scan_points)
        curve = spectro.transmission_spectrum(system.replace(omega_rf=TWO_PI * split), scan)
        rng = np.random.default_rng(seed_for(cfg.seed if rng_seed is None else rng_seed, 901, i))
        amp = np.ptp(curve.values)
        noisy = np.mean([curve.values + s.cal_noise * amp * rng.standard_normal(scan.size)
                         for _ in range(n_traces)], axis=0)
        out.append((p, spectro.SpectrumCurve(scan, noisy, n_averages=n_traces,
                                             metadata={"rf_power_dbm": p, "field_vm": e})))
    return out


def simulate_axis_scan(cfg, rng_seed=None, noise=None):
    """RF-free EIT scan with the D3/2 companion, on a raw (unit-less) axis."""
    s = cfg.sweep
    system = cfg.system(omega_rf=0.0)
    hz = np.linspace(-140e6, 60e6, 1201)
    curve = spectro.transmission_spectrum(system, hz, include_d32=True)
    rng = np.random.default_rng(seed_for(cfg.seed if rng_seed is None else rng_seed, 902))
    noise = s.cal_noise if noise is None else noise
    vals = curve.values + noise * np.ptp(curve.values) * rng.standard_normal(hz.size)
    raw = (hz - hz[0]) / s.axis_scale_true
    return spectro.SpectrumCurve(raw, vals, metadata={"axis_scale_true": s.axis_scale_true})


# --------------------------------------------------------------------------
# EVM campaigns
# --------------------------------------------------------------------------

@dataclass
class CampaignPoint:
    x: float
    report: modem.EVMReport
    evms: list

    @property
    def mean(self):
        return float(np.mean(self.evms))

    @property
    def stderr(self):
        return float(np.std(self.evms, ddof=1) / math.sqrt(len(self.evms))) if len(self.evms) > 1 else 0.0


def _modem_fs(f_b, symbol_rate, fs_factor):
    fs_min = max(fs_factor * f_b, 2.2 * (f_b + symbol_rate), 8 * symbol_rate)
    return symbol_rate * math.ceil(fs_min / symbol_rate)


def evm_run(cfg, receiver, channel, beatnote, symbol_rate, seed_tag, noise=None):
    """One generate -> modulate -> channel -> average -> demodulate -> EVM run."""
    m = cfg.modem
    noise = noise or cfg.noise
    stream = modem.generate_symbols(m.count, rng_seed=seed_for(cfg.seed, *seed_tag, 7),
                                    prbs=m.prbs, symbol_rate=symbol_rate)
    fs = _modem_fs(beatnote, symbol_rate, cfg.readout.fs_factor)
    env, _ = modem.qpsk_modulate(stream, beatnote, fs, pulse=m.pulse, rolloff=m.rolloff)
    drive = receiver.drive(m.sig_power, beatnote, modulation=env, modulation_rate=fs)
    traces = []
    for k in range(m.traces_per_point):
        seed = seed_for(cfg.seed, *seed_tag, k)
        if channel == "atomic":
            tr = readout.synthesize_trace(receiver.responsivity, receiver.bandwidth, drive, noise,
                                          receiver.gain, receiver.cal, stream.duration, fs, seed,
                                          detector_gain=receiver.detector_gain)
        else:
            tr = modem.reference_mixer_channel(drive, m.mixer_bandwidth, noise, fs,
                                               stream.duration, seed,
                                               gain=receiver.gain * receiver.responsivity,
                                               cal=receiver.cal,
                                               detector_gain=receiver.detector_gain)
        traces.append(tr.samples)
    avg = readout.TimeTrace(np.mean(traces, axis=0), fs, len(traces[0]) / fs)
    const = modem.demodulate(avg, beatnote, stream, cutoff_factor=m.cutoff_factor, iq_swap=m.iq_swap)
    return modem.evm(const, symbol_rate, beatnote), const


def evm_campaign(cfg, sweep=None, values=None, channel="atomic", receiver=None, noise=None,
                 n_seeds=None):
    """EVM over a symbol-rate or beatnote sweep, averaged over seeds.

    ``sweep`` is ``'symbol_rate'`` (at ``modem.beatnote``) or ``'beatnote'``
    (at ``modem.symbol_rate``). Each point requires beatnote >= 2.5 x
    symbol rate. Points are returned in sweep order.
    """
    m = cfg.modem
    sweep = sweep or m.sweep
    if channel not in ("atomic", "mixer"):
        raise ConfigError("channel must be 'atomic' or 'mixer'", field="channel")
    if sweep == "symbol_rate":
        values = list(m.symbol_rates if values is None else values)
        pairs = [(m.beatnote, r) for r in values]
    elif sweep == "beatnote":
        values = list(m.beatnotes if values is None else values)
        pairs = [(b, m.symbol_rate) for b in values]
    else:
        raise ConfigError(f"unknown sweep {sweep!r}", field="modem.sweep")
    for (b, r) in pairs:
        if b < 2.5 * r:
            raise ConfigError(
                f"beatnote {b:g} Hz < 2.5 x symbol rate {r:g} Hz (spectral containment)",
                field=f"modem.{'symbol_rates' if sweep == 'symbol_rate' else 'beatnotes'}")
    receiver = receiver or build_receiver(cfg)
    n_seeds = m.n_seeds if n_seeds is None else n_seeds
    ch = 0 if channel == "atomic" else 1
    out = []
    for i, ((b, r), x) in enumerate(zip(pairs, values)):
        # seeds are shared between channels so paired comparisons see identical noise
        evms = [evm_run(cfg, receiver, channel, b, r, (500, i, j), noise)[0].evm_rms
                for j in range(n_seeds)]
        mean = float(np.mean(evms))
        rep = modem.EVMReport(mean, np.array(evms), r, b)
        out.append(CampaignPoint(float(x), rep, evms))
    return out


def modulated_bandwidth(points, factor=2.0):
    """Beatnote where campaign EVM reaches ``factor`` x its in-band value.

    The in-band value uses the same baseline rule as ``extract_bandwidth``.
    """
    pts = sorted(points, key=lambda p: p.x)
    xs = np.array([p.x for p in pts])
    ys = np.array([p.mean for p in pts])
    k, base = _baseline(ys)
    return crossing(xs, ys, factor, base, k)
