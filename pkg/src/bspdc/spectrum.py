"""Counter-propagating quasi-phase-matching: mismatch, tuning curves, spectra.

Geometry: a forward pump (H, crystal y) produces a forward signal (H, y) and
a backward idler (V, z).  Because the idler runs against the pump its
wavevector enters the mismatch with a plus sign::

    dk = k_p - k_s + k_i - 2 pi m / Lambda

Wavelengths are vacuum wavelengths in metres, angular detunings in rad/s.
"""
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.optimize import brentq

from . import _kernels

C_LIGHT = 299_792_458.0
SINC2_HALF_MAX_X = 1.3915573782515103  # sin(x)^2/x^2 = 1/2


class PhaseMatchingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# dispersion
# ---------------------------------------------------------------------------

def _index_function(form, coeffs):
    if form == "constant":
        n = float(coeffs["n"])
        return lambda lam: np.full_like(np.asarray(lam, dtype=float), n)
    if form in ("sellmeier", "pole"):
        a = float(coeffs["A"])
        b = np.asarray(coeffs.get("B", []), dtype=float)
        c = np.asarray(coeffs.get("C", []), dtype=float)
        d = float(coeffs.get("D", 0.0))
        if b.shape != c.shape:
            raise ValueError("B and C coefficient lists differ in length")

        def n_of(lam):
            l2 = (np.asarray(lam, dtype=float) * 1e6) ** 2
            n2 = a - d * l2
            for bk, ck in zip(b, c):
                n2 = n2 + (bk * l2 / (l2 - ck) if form == "sellmeier" else bk / (l2 - ck))
            return np.sqrt(n2)

        return n_of
    if form == "cauchy":
        a = np.asarray(coeffs["a"], dtype=float)

        def n_of(lam):
            lu = np.asarray(lam, dtype=float) * 1e6
            return sum(ak * lu ** (-2 * k) for k, ak in enumerate(a))

        return n_of
    raise ValueError(f"unknown dispersion form {form!r}")


@dataclass
class DispersionModel:
    """Refractive indices along the crystal y (H) and z (V) axes."""

    name: str
    n_y: object
    n_z: object
    validity: tuple

    def __post_init__(self):
        lo, hi = self.validity
        if not 0 < lo < hi:
            raise ValueError(f"bad validity window {self.validity}")
        lam = np.geomspace(lo, hi, 64)
        for axis, fn in (("y", self.n_y), ("z", self.n_z)):
            n = fn(lam)
            if not np.all(np.isfinite(n)) or np.any(n <= 1.0):
                raise ValueError(f"{self.name}: n_{axis} <= 1 or non-finite in validity window")

    @classmethod
    def from_coefficients(cls, name, spec):
        form = spec["form"]
        return cls(
            name=name,
            n_y=_index_function(form, spec["y"]),
            n_z=_index_function(form, spec["z"]),
            validity=tuple(float(v) for v in spec["validity_m"]),
        )

    def check(self, *wavelengths):
        lo, hi = self.validity
        for lam in wavelengths:
            lam = np.asarray(lam)
            if np.any(lam < lo) or np.any(lam > hi):
                raise PhaseMatchingError(
                    f"wavelength outside {self.name} validity window [{lo:.4g}, {hi:.4g}] m")


def load_dispersion_sets(path=None):
    """Named coefficient sets from ``path`` or the bundled fixture file."""
    if path is None:
        text = resources.files("bspdc").joinpath("data/dispersion.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)["sets"]


def get_dispersion(name, path=None):
    sets = load_dispersion_sets(path)
    if name not in sets:
        raise KeyError(f"unknown dispersion set {name!r}; available: {sorted(sets)}")
    return DispersionModel.from_coefficients(name, sets[name])


@dataclass(frozen=True)
class QpmGrating:
    period: float
    order: int
    length: float

    def __post_init__(self):
        if self.period <= 0 or self.length <= 0:
            raise ValueError("period and length must be positive")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("QPM order must be a positive integer")

    @property
    def reciprocal_vector(self):
        return 2 * np.pi * self.order / self.period

    def with_length(self, length):
        return QpmGrating(self.period, self.order, length)


# ---------------------------------------------------------------------------
# mismatch and tuning curves
# ---------------------------------------------------------------------------

def idler_wavelength(lambda_p, lambda_s):
    lambda_p = np.asarray(lambda_p, dtype=float)
    lambda_s = np.asarray(lambda_s, dtype=float)
    if np.any(lambda_s <= lambda_p):
        raise PhaseMatchingError("signal wavelength must exceed the pump wavelength")
    return 1.0 / (1.0 / lambda_p - 1.0 / lambda_s)


def free_mismatch(disp, lambda_p, lambda_s):
    """``k_p - k_s + k_i`` without the grating term."""
    lambda_i = idler_wavelength(lambda_p, lambda_s)
    disp.check(lambda_p, lambda_s, lambda_i)
    two_pi = 2 * np.pi
    return two_pi * (disp.n_y(lambda_p) / lambda_p
                     - disp.n_y(lambda_s) / lambda_s
                     + disp.n_z(lambda_i) / lambda_i)


def backward_mismatch(disp, grating, lambda_p, lambda_s):
    """Phase mismatch in rad/m for a forward signal and backward idler."""
    return free_mismatch(disp, lambda_p, lambda_s) - grating.reciprocal_vector


def sinc2(x):
    """``sin(x)^2 / x^2`` with the removable singularity filled."""
    return np.sinc(np.asarray(x) / np.pi) ** 2


def fwhm(x, y):
    """Full width at half maximum of the peak containing ``max(y)``.

    Half-maximum crossings are located by linear interpolation; raises if the
    peak is not bracketed by the grid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmax(y))
    half = y[i0] / 2.0
    left = i0
    while left > 0 and y[left] > half:
        left -= 1
    right = i0
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise PhaseMatchingError("peak is not bracketed by the grid")
    xl = x[left] + (half - y[left]) * (x[left + 1] - x[left]) / (y[left + 1] - y[left])
    xr = x[right - 1] + (half - y[right - 1]) * (x[right] - x[right - 1]) / (y[right] - y[right - 1])
    return abs(xr - xl)


@dataclass
class TuningCurve:
    pump_wavelength: np.ndarray
    mismatch: np.ndarray
    intensity: np.ndarray

    @property
    def fundamental_wavelength(self):
        return 2.0 * self.pump_wavelength

    def peak_wavelength(self):
        return float(self.pump_wavelength[np.argmax(self.intensity)])

    def fwhm_pump(self):
        return fwhm(self.pump_wavelength, self.intensity)

    def fwhm_fundamental(self):
        return fwhm(self.fundamental_wavelength, self.intensity)


def sinc2_tuning_curve(disp, grating, lambda_p_grid):
    """Backward SFG efficiency versus pump (SFG) wavelength.

    Both fundamental beams come from one laser at ``2 * lambda_p``, so the
    scan runs along the degenerate line ``lambda_s = lambda_i = 2 lambda_p``.
    """
    lp = np.asarray(lambda_p_grid, dtype=float)
    dk = backward_mismatch(disp, grating, lp, 2.0 * lp)
    return TuningCurve(lp, dk, sinc2(dk * grating.length / 2.0))


def solve_degeneracy(disp, grating, bracket=None, samples=2001):
    """Pump wavelength where the degenerate mismatch vanishes.

    Without ``bracket`` the validity window is scanned for the first sign
    change of the mismatch.
    """
    def g(lp):
        return float(backward_mismatch(disp, grating, lp, 2.0 * lp))

    if bracket is None:
        lo, hi = disp.validity
        lo, hi = lo * (1 + 1e-9), hi / 2.0 * (1 - 1e-9)
        if lo >= hi:
            raise PhaseMatchingError("validity window too narrow for degenerate operation")
        lp = np.linspace(lo, hi, samples)
        vals = backward_mismatch(disp, grating, lp, 2.0 * lp)
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
        if flips.size == 0:
            raise PhaseMatchingError("no degenerate phase-matching root in the validity window")
        bracket = (lp[flips[0]], lp[flips[0] + 1])
    a, b = bracket
    if g(a) * g(b) > 0:
        raise PhaseMatchingError(f"bracket {bracket} does not contain a sign change")
    return brentq(g, a, b, xtol=1e-22, rtol=4 * np.finfo(float).eps, maxiter=500)


# ---------------------------------------------------------------------------
# biphoton spectrum
# ---------------------------------------------------------------------------

def convert_bandwidth(delta_lambda, center_lambda):
    """Wavelength width (m) to frequency width (Hz): ``c dl / l^2``."""
    if delta_lambda <= 0 or center_lambda <= 0:
        raise ValueError("bandwidth and centre wavelength must be positive")
    return C_LIGHT * delta_lambda / center_lambda ** 2


def bandwidth_to_wavelength(delta_nu, center_lambda):
    """Inverse of :func:`convert_bandwidth`."""
    if delta_nu <= 0 or center_lambda <= 0:
        raise ValueError("bandwidth and centre wavelength must be positive")
    return delta_nu * center_lambda ** 2 / C_LIGHT


@dataclass
class SpectralAmplitude:
    """Signal-arm biphoton amplitude sampled on a uniform detuning grid.

    ``detuning`` is the signal angular-frequency offset from
    ``center_wavelength``; the idler sits at the mirrored detuning.
    """

    detuning: np.ndarray
    amplitude: np.ndarray
    center_wavelength: float

    def __post_init__(self):
        self.detuning = np.asarray(self.detuning, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=complex)
        if self.detuning.ndim != 1 or self.detuning.size < 3:
            raise ValueError("detuning grid needs at least three samples")
        if self.amplitude.shape != self.detuning.shape:
            raise ValueError("amplitude and grid shapes differ")
        steps = np.diff(self.detuning)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("detuning grid must be uniform and increasing")

    @property
    def spacing(self):
        return float(self.detuning[1] - self.detuning[0])

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    @property
    def center_frequency(self):
        return C_LIGHT / self.center_wavelength

    def frequency(self):
        """Absolute optical frequency (Hz) of each signal sample."""
        return self.center_frequency + self.detuning / (2 * np.pi)

    def idler(self):
        """Idler-arm amplitude on the same grid (mirror image)."""
        return SpectralAmplitude(-self.detuning[::-1], self.amplitude[::-1].copy(),
                                 self.center_wavelength)

    def normalized(self):
        peak = np.max(np.abs(self.amplitude))
        return SpectralAmplitude(self.detuning, self.amplitude / peak, self.center_wavelength)

    def fwhm_hz(self):
        return fwhm(self.detuning, self.intensity) / (2 * np.pi)

    def fwhm_m(self):
        return bandwidth_to_wavelength(self.fwhm_hz(), self.center_wavelength)

    def energy(self):
        return float(np.sum(self.intensity) * self.spacing)


def detuning_grid(span_hz, n):
    """Symmetric angular-detuning grid covering ``+-span_hz``."""
    return 2 * np.pi * np.linspace(-span_hz, span_hz, n)


def domain_walls(grating, duty_error=0.0, seed=None, duty=0.5):
    """Domain-wall positions and orientation signs of a poled grating.

    Period boundaries sit at ``k * Lambda``; the interior wall of period ``k``
    is at ``(k + duty + e_k) * Lambda`` with ``e_k ~ N(0, duty_error)``.
    """
    n_per = int(round(grating.length / grating.period))
    k = np.arange(n_per)
    d = np.full(n_per, duty)
    if duty_error > 0:
        rng = np.random.default_rng(seed)
        d = np.clip(d + rng.normal(0.0, duty_error, n_per), 0.0, 1.0)
    walls = np.empty(2 * n_per + 1)
    walls[0:-1:2] = k * grating.period
    walls[1::2] = (k + d) * grating.period
    walls[-1] = n_per * grating.period
    signs = np.tile([1.0, -1.0], n_per)
    return walls, signs


def bspdc_spectrum(disp, grating, lambda_p, grid, duty_error=None, seed=None):
    """Signal amplitude ``sinc(dk L / 2)`` of backward SPDC on ``grid``.

    ``grid`` holds signal angular detunings (rad/s) around the degenerate
    frequency ``omega_p / 2``.  The mismatch is evaluated exactly at every
    sample.  With ``duty_error`` set, the amplitude is instead summed domain by
    domain over a grating with random duty-cycle errors, which produces the
    asymmetric satellite peaks of an imperfect grating.
    """
    grid = np.asarray(grid, dtype=float)
    omega_s = np.pi * C_LIGHT / lambda_p + grid
    lambda_s = 2 * np.pi * C_LIGHT / omega_s
    dk = backward_mismatch(disp, grating, lambda_p, lambda_s)
    x = dk * grating.length / 2.0
    if np.min(np.abs(x)) >= np.pi:
        raise PhaseMatchingError("no phase-matching solution inside the detuning grid")
    if duty_error is None:
        amp = np.sinc(x / np.pi).astype(complex)
    else:
        walls, signs = domain_walls(grating, duty_error, seed)
        amp = _kernels.grating_sum(dk + grating.reciprocal_vector, walls, signs)
    spec = SpectralAmplitude(grid, amp, 2.0 * lambda_p)
    return spec.normalized()


def sinc_spectrum(alpha, grid, center_wavelength=1553.48e-9):
    """Model amplitude ``sinc(alpha * Omega)`` (alpha in seconds)."""
    grid = np.asarray(grid, dtype=float)
    return SpectralAmplitude(grid, np.sinc(alpha * grid / np.pi).astype(complex),
                             center_wavelength)


# ---------------------------------------------------------------------------
# filters
# ---------------------------------------------------------------------------

@dataclass
class FilterSpec:
    """Fabry-Perot filter transmission.

    ``lorentzian`` models a single resonance; ``airy`` uses the free spectral
    range of an etalon of the given thickness and index.
    """

    center: float
    linewidth: float
    shape: str = "lorentzian"
    peak: float = 1.0
    thickness: float = 100e-6
    index: float = 1.444

    def __post_init__(self):
        if self.linewidth <= 0:
            raise ValueError("filter linewidth must be positive")
        if not 0 < self.peak <= 1:
            raise ValueError("peak transmission must lie in (0, 1]")
        if self.shape not in ("lorentzian", "airy"):
            raise ValueError(f"unknown filter shape {self.shape!r}")

    @property
    def center_frequency(self):
        return C_LIGHT / self.center

    @property
    def linewidth_hz(self):
        return convert_bandwidth(self.linewidth, self.center)

    @property
    def fsr_hz(self):
        return C_LIGHT / (2 * self.index * self.thickness)

    def transmission(self, freq):
        """Intensity transmission at optical frequency ``freq`` (Hz)."""
        d = np.asarray(freq, dtype=float) - self.center_frequency
        gamma = self.linewidth_hz
        if self.shape == "lorentzian":
            t = 1.0 / (1.0 + (2 * d / gamma) ** 2)
        else:
            fsr = self.fsr_hz
            if gamma >= fsr:
                raise ValueError("airy linewidth must be below the free spectral range")
            coef = 1.0 / np.sin(np.pi * gamma / (2 * fsr)) ** 2
            t = 1.0 / (1.0 + coef * np.sin(np.pi * d / fsr) ** 2)
        return self.peak * t


def apply_filter(spec, filt):
    """Multiply the signal amplitude by the filter's amplitude transmission."""
    freq = spec.frequency()
    if not freq[0] <= filt.center_frequency <= freq[-1]:
        raise ValueError("filter centre lies outside the spectral grid")
    amp = spec.amplitude * np.sqrt(filt.transmission(freq))
    return SpectralAmplitude(spec.detuning, amp, spec.center_wavelength)
