"""Steady-state probe transmission for a four-level Rydberg cascade.

Level scheme (ground 1, intermediate 2, Rydberg 3, Rydberg 4)::

    |4>  nP      ---
                  |  RF      (omega_rf, delta_rf)
    |3>  nD      ---
                  |  coupling (omega_c, delta_c)   ~480 nm
    |2>  5P3/2   ---
                  |  probe   (omega_p, delta_p)    ~780 nm
    |1>  5S1/2   ---

All rates and Rabi frequencies are angular (rad/s); scan axes and
fine-structure offsets are in Hz.
"""

from dataclasses import dataclass, field, replace, asdict
import math

import numpy as np
from scipy import constants as const

from .errors import ParameterError, InputError, ConvergenceError, DegenerateOperatingPoint
from . import io

TWO_PI = 2.0 * math.pi
HBAR = const.hbar
KB = const.k
RB85_MASS = 84.911789738 * const.atomic_mass
#: atomic unit of electric dipole moment, e * a0 (C m)
EA0 = const.e * const.physical_constants["Bohr radius"][0]

DOPPLER_SPAN = 4.0  # grid half-width in most-probable speeds
DOPPLER_RTOL = 1e-4
DOPPLER_MIN_POINTS = 513
DOPPLER_MAX_POINTS = 2**17 + 1


@dataclass(frozen=True)
class AtomicSystem:
    """Parameters of the four-level ladder and the vapor cell.

    Defaults follow the experiment: 83/102 um beam radii, 18/13 MHz probe
    and coupling Rabi frequencies, 55 C, 30 mm cell. ``absorption_coeff``
    is the peak resonant (Doppler-broadened, EIT-free) absorption
    coefficient in 1/m, so the cell optical depth is
    ``absorption_coeff * cell_length``.
    """

    omega_p: float = TWO_PI * 18e6
    omega_c: float = TWO_PI * 13e6
    omega_rf: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_rf: float = 0.0
    gamma_e: float = TWO_PI * 6.0666e6
    gamma_r: float = TWO_PI * 0.1e6
    gamma_t: float = TWO_PI * 1.6867e6
    lambda_p: float = 780.241e-9
    lambda_c: float = 479.8e-9
    waist_p: float = 83e-6
    waist_c: float = 102e-6
    temperature: float = 328.15
    cell_length: float = 0.03
    fine_structure_offset: float = 92e6
    absorption_coeff: float = 40.0
    mass: float = RB85_MASS
    thermal_speed: float | None = 280.0
    d32_amplitude: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive = (
            "omega_p", "gamma_e", "gamma_r", "lambda_p", "lambda_c",
            "waist_p", "waist_c", "temperature", "cell_length",
            "fine_structure_offset", "absorption_coeff", "mass",
        )
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
        # Rabi frequencies of the upper legs and the transit rate may be zero
        # (EIT-free / RF-free / transit-free limits).
        for name in ("omega_c", "omega_rf", "gamma_t"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")
        for name in ("delta_p", "delta_c", "delta_rf"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.thermal_speed is not None and not self.thermal_speed > 0:
            raise ParameterError("thermal_speed override must be > 0")
        if not 0 <= self.d32_amplitude <= 1:
            raise ParameterError("d32_amplitude must lie in [0, 1]")

    @property
    def k_p(self):
        return TWO_PI / self.lambda_p

    @property
    def k_c(self):
        return TWO_PI / self.lambda_c

    @property
    def optical_depth(self):
        return self.absorption_coeff * self.cell_length

    @property
    def mean_speed(self):
        """Thermal speed used for transit estimates (override or sqrt(8kT/pi m))."""
        if self.thermal_speed is not None:
            return self.thermal_speed
        return math.sqrt(8 * KB * self.temperature / (math.pi * self.mass))

    def coherence_rates(self):
        """Decay rates (gamma21, gamma31, gamma41) of the ground coherences."""
        return (
            self.gamma_e / 2 + self.gamma_t,
            self.gamma_r / 2 + self.gamma_t,
            self.gamma_r / 2 + self.gamma_t,
        )

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


@dataclass
class SpectrumCurve:
    axis: np.ndarray
    values: np.ndarray
    axis_kind: str = "coupling-detuning"
    n_averages: int = 1
    in_db: bool = False
    metadata: dict = field(default_factory=dict)

    AXIS_KINDS = ("coupling-detuning", "fourier-frequency")

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.ndim != 1 or self.axis.shape != self.values.shape:
            raise InputError("axis and values must be 1-D arrays of equal length")
        if self.axis.size and np.any(np.diff(self.axis) <= 0):
            raise InputError("axis must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise InputError("values must be finite")
        if self.axis_kind not in self.AXIS_KINDS:
            raise InputError(f"unknown axis_kind {self.axis_kind!r}")
        if int(self.n_averages) < 1:
            raise InputError("n_averages must be >= 1")

    def to_csv(self, path, parameters=None):
        meta = {
            "axis_kind": self.axis_kind,
            "n_averages": int(self.n_averages),
            "in_db": self.in_db,
            "parameters": parameters if parameters is not None else self.metadata,
        }
        rows = zip(self.axis.tolist(), self.values.tolist())
        return io.write_csv(path, ["frequency_hz", "value"], rows, meta)

    @classmethod
    def from_csv(cls, path):
        meta, _, data = io.read_csv(path)
        return cls(
            np.array(data["frequency_hz"]),
            np.array(data["value"]),
            axis_kind=meta.get("axis_kind", "coupling-detuning"),
            n_averages=int(meta.get("n_averages", 1)),
            in_db=bool(meta.get("in_db", False)),
            metadata=meta.get("parameters") or {},
        )


def _chain(system, dp, dc, omega_c, omega_rf):
    """Weak-probe coherence for (broadcastable) Doppler-shifted detunings."""
    g21, g31, g41 = system.coherence_rates()
    d4 = g41 - 1j * (dp + dc + system.delta_rf)
    d3 = g31 - 1j * (dp + dc) + (omega_rf**2 / 4) / d4
    d2 = g21 - 1j * dp + (omega_c**2 / 4) / d3
    return 0.5j * system.omega_p / d2


def steady_state_coherence(system, velocity=0.0):
    """Weak-probe ground-intermediate coherence for one velocity class.

    Counter-propagating probe and coupling beams see Doppler shifts
    ``+k_p v`` and ``-k_c v``. The returned coherence has a non-negative
    imaginary part (absorption). Accepts scalar or array ``velocity``.
    """
    system.validate()
    v = np.asarray(velocity, dtype=float)
    dp = system.delta_p + system.k_p * v
    dc = system.delta_c - system.k_c * v
    out = _chain(system, dp, dc, system.omega_c, system.omega_rf)
    return out if np.ndim(out) else complex(out)


def most_probable_speed(temperature, mass=RB85_MASS):
    return math.sqrt(2 * KB * temperature / mass)


def _maxwell_grid(temperature, mass, n):
    u = most_probable_speed(temperature, mass)
    v = np.linspace(-DOPPLER_SPAN * u, DOPPLER_SPAN * u, n)
    w = np.exp(-((v / u) ** 2))
    # trapezoid end weights, then exact normalization on the truncated grid
    w[0] *= 0.5
    w[-1] *= 0.5
    return v, w / w.sum()


def _average_on_grid(integrand, temperature, mass, n):
    v, w = _maxwell_grid(temperature, mass, n)
    values = np.asarray(integrand(v))
    return values @ w


def doppler_average(integrand, temperature, mass=RB85_MASS, rtol=DOPPLER_RTOL,
                    return_points=False):
    """Maxwell-Boltzmann average of ``integrand(v)`` over one velocity axis.

    ``integrand`` maps a 1-D velocity array (m/s) to an array whose last
    axis runs over velocity. The grid spans +-4 most-probable speeds and is
    refined by doubling until successive estimates agree to ``rtol``
    (max-norm, relative to the largest magnitude).
    """
    if not (np.isfinite(temperature) and temperature > 0):
        raise ParameterError("temperature must be > 0")
    if not mass > 0:
        raise ParameterError("mass must be > 0")
    n = DOPPLER_MIN_POINTS
    prev = _average_on_grid(integrand, temperature, mass, n)
    history = []
    while True:
        n = 2 * n - 1
        cur = _average_on_grid(integrand, temperature, mass, n)
        scale = np.max(np.abs(cur))
        change = np.max(np.abs(cur - prev))
        history.append((n, float(change), float(scale)))
        if change <= rtol * scale or scale == 0:
            break
        if n >= DOPPLER_MAX_POINTS:
            raise ConvergenceError(
                "Doppler average did not converge",
                {"points": n, "history": history, "rtol": rtol},
            )
        prev = cur
    result = cur if np.ndim(cur) else complex(cur) if np.iscomplexobj(cur) else float(cur)
    return (result, n) if return_points else result


def transit_rate(waist, temperature=None, thermal_speed=None, mass=RB85_MASS):
    """Transit time ``2 w / v`` and its inverse.

    ``thermal_speed`` overrides the mean speed sqrt(8kT/pi m).

    Returns
    -------
    rate : float
        1 / transit_time in Hz.
    transit_time : float
        Seconds.
    """
    if not waist > 0:
        raise ParameterError("waist must be > 0")
    if thermal_speed is None:
        if temperature is None or not temperature > 0:
            raise ParameterError("temperature must be > 0 when no thermal_speed is given")
        thermal_speed = math.sqrt(8 * KB * temperature / (math.pi * mass))
    elif not thermal_speed > 0:
        raise ParameterError("thermal_speed must be > 0")
    tau = 2.0 * waist / thermal_speed
    return 1.0 / tau, tau


def at_splitting_to_field(splitting, dipole_moment):
    """Field magnitude (V/m) from an Autler-Townes splitting in Hz."""
    if not dipole_moment > 0:
        raise ParameterError("dipole_moment must be > 0")
    return HBAR * TWO_PI * np.asarray(splitting, dtype=float) / dipole_moment


def field_to_splitting(field_vm, dipole_moment):
    if not dipole_moment > 0:
        raise ParameterError("dipole_moment must be > 0")
    return np.asarray(field_vm, dtype=float) * dipole_moment / (HBAR * TWO_PI)


def field_to_rabi(field_vm, dipole_moment):
    """RF Rabi frequency (rad/s) for a field magnitude."""
    return TWO_PI * field_to_splitting(field_vm, dipole_moment)


def _doppler_im(system, delta_c, omega_c, omega_rf, n_points):
    """Doppler-averaged Im(coherence) for an array of coupling detunings."""
    dc = np.atleast_1d(np.asarray(delta_c, dtype=float))[:, None]

    def integrand(v):
        dp = system.delta_p + system.k_p * v[None, :]
        return _chain(system, dp, dc - system.k_c * v[None, :], omega_c, omega_rf).imag

    if n_points is None:
        return doppler_average(integrand, system.temperature, system.mass, return_points=True)
    return _average_on_grid(integrand, system.temperature, system.mass, n_points), n_points


def _reference_absorption(system, n_points=None):
    """Doppler-averaged two-level absorption at the probe detuning."""
    val, _ = _doppler_im(system, [system.delta_c], 0.0, 0.0, n_points)
    return float(val[0])


def _transmission(system, delta_c, n_points=None):
    """Transmission and the grid size actually used (internal)."""
    im, n = _doppler_im(system, delta_c, system.omega_c, system.omega_rf, n_points)
    ref = _reference_absorption(system, n)
    return np.exp(-system.optical_depth * im / ref), n


def transmission_spectrum(system, scan, include_d32=False):
    """Probe transmission while the coupling laser is scanned.

    Parameters
    ----------
    system : AtomicSystem
        ``delta_c`` is ignored; the scan supplies it.
    scan : array_like
        Coupling detunings in Hz, strictly increasing.
    include_d32 : bool
        Add the RF-free companion EIT peak ``fine_structure_offset`` below
        the main peak, scaled by ``d32_amplitude``.
    """
    scan = np.asarray(scan, dtype=float)
    if scan.ndim != 1 or scan.size == 0:
        raise InputError("scan must be a non-empty 1-D array")
    if np.any(np.diff(scan) <= 0):
        raise InputError("scan must be strictly increasing")
    system.validate()
    dc = TWO_PI * scan
    im, n = _doppler_im(system, dc, system.omega_c, system.omega_rf, None)
    ref = _reference_absorption(system, n)
    if include_d32 and system.d32_amplitude > 0:
        shifted = dc + TWO_PI * system.fine_structure_offset
        eit, _ = _doppler_im(system, shifted, system.omega_c, 0.0, n)
        bare, _ = _doppler_im(system, shifted, 0.0, 0.0, n)
        im = im + system.d32_amplitude * (eit - bare)
    values = np.exp(-system.optical_depth * im / ref)
    meta = {k: v for k, v in system.to_dict().items()}
    meta["include_d32"] = bool(include_d32)
    meta["doppler_points"] = int(n)
    return SpectrumCurve(scan, values, axis_kind="coupling-detuning", metadata=meta)


def locked_transmission(system, field_vm, dipole_moment, n_points=None):
    """Transmission with both lasers locked and an RF field of given magnitude."""
    s = system.replace(omega_rf=float(field_to_rabi(abs(field_vm), dipole_moment)))
    t, n = _transmission(s, [system.delta_c], n_points)
    return float(t[0]), n


def small_signal_responsivity(system, field_lo, dipole_moment, rel_step=0.05,
                              rtol=0.01, max_halvings=12):
    """dTransmission/dField (per V/m) at the LO bias point.

    Central differences on a fixed (converged) Doppler grid; the step is
    halved until the Richardson error estimate ``|D(h) - D(h/2)| / 3``
    drops below ``rtol`` of the derivative.

    Raises
    ------
    DegenerateOperatingPoint
        When the derivative cannot be separated from zero (e.g. no LO
        field, where transmission is even in the field). ``estimate`` on
        the exception carries the last central-difference value.
    """
    if not dipole_moment > 0:
        raise ParameterError("dipole_moment must be > 0")
    if field_lo < 0 or not np.isfinite(field_lo):
        raise ParameterError("field_lo must be finite and >= 0")
    _, n = locked_transmission(system, field_lo, dipole_moment)
    n = 2 * n - 1  # one refinement beyond convergence, kept fixed for all stencils

    def trans(e):
        return locked_transmission(system, e, dipole_moment, n)[0]

    h = rel_step * field_lo if field_lo > 0 else 1e-3
    # smallest derivative resolvable against double rounding of T
    def noise_floor(step):
        return 1e-12 / step

    def central(step):
        return (trans(field_lo + step) - trans(field_lo - step)) / (2 * step)

    d_prev = central(h)
    for _ in range(max_halvings):
        h /= 2
        d = central(h)
        if abs(d) <= noise_floor(h) + 1e-9 * abs(trans(field_lo)):
            raise DegenerateOperatingPoint(
                f"responsivity indistinguishable from zero at E_lo={field_lo} V/m", estimate=d
            )
        err = abs(d - d_prev) / 3
        if err < rtol * abs(d):
            return d
        d_prev = d
    raise ConvergenceError(
        "finite-difference step refinement did not converge",
        {"step": h, "derivative": d, "error_estimate": err},
    )
