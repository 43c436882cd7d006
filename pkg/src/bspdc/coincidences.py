"""Synthetic coincidence counts and fringe analysis.

Counts are Poissonian.  Expected coincidences for one analyser setting are::

    mu = rate * T * eta_R * eta_L * Tr(rho P_R (x) P_L) + accidental_rate * T

Singles are built on top of the true coincidences so that
``singles >= true coincidences`` always holds.
"""
from dataclasses import dataclass, field

import numpy as np

from .polarization import LABEL_ANGLES, projector
from .state import check_physical, joint_probability, marginal_probability

DEFAULT_WINDOW = 1e-9
FRINGE_BASES = ("H", "V", "D", "A")


def _arm_angles(arm):
    if isinstance(arm, str):
        try:
            return LABEL_ANGLES[arm]
        except KeyError:
            raise ValueError(f"unknown analyser label {arm!r}") from None
    q, h = arm
    if not (np.isfinite(q) and np.isfinite(h)):
        raise ValueError("analyser angles must be finite")
    return float(q), float(h)


@dataclass
class CountsRecord:
    """One projective setting and its detections.  Angles in radians."""

    qwp_r: float
    hwp_r: float
    qwp_l: float
    hwp_l: float
    coincidences: int
    singles_r: int = 0
    singles_l: int = 0
    duration: float = 1.0
    window: float = DEFAULT_WINDOW
    tag: str = None

    def __post_init__(self):
        if min(self.coincidences, self.singles_r, self.singles_l) < 0:
            raise ValueError("counts must be non-negative")
        if self.duration <= 0 or self.window <= 0:
            raise ValueError("duration and coincidence window must be positive")

    def projector_r(self):
        return projector(angles=(self.qwp_r, self.hwp_r))

    def projector_l(self):
        return projector(angles=(self.qwp_l, self.hwp_l))


def seed_sequence(seed):
    """``SeedSequence`` from an int, a sequence of ints or an existing sequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def expected_coincidences(rho, setting, rate, duration, noise):
    (qr, hr), (ql, hl) = (_arm_angles(a) for a in setting)
    p = joint_probability(rho, projector(angles=(qr, hr)), projector(angles=(ql, hl)))
    return (rate * duration * noise.efficiency_r * noise.efficiency_l * p
            + noise.accidental_rate * duration)


def simulate_counts(rho, setting, rate, duration, noise, seed=None,
                    window=DEFAULT_WINDOW, tag=None):
    """Draw one :class:`CountsRecord` for ``setting = (arm_R, arm_L)``.

    Each arm is a label from ``LABEL_ANGLES`` or a ``(qwp, hwp)`` angle pair.
    """
    check_physical(rho)
    if rate <= 0 or duration <= 0:
        raise ValueError("rate and duration must be positive")
    (qr, hr), (ql, hl) = (_arm_angles(a) for a in setting)
    pr, pl = projector(angles=(qr, hr)), projector(angles=(ql, hl))
    rng = _rng(seed)
    eta_r, eta_l = noise.efficiency_r, noise.efficiency_l
    pairs = rate * duration
    p_joint = joint_probability(rho, pr, pl)
    true_c = rng.poisson(pairs * eta_r * eta_l * p_joint)
    acc = rng.poisson(noise.accidental_rate * duration)
    extra_r = pairs * eta_r * max(marginal_probability(rho, pr, "R") - eta_l * p_joint, 0.0)
    extra_l = pairs * eta_l * max(marginal_probability(rho, pl, "L") - eta_r * p_joint, 0.0)
    dark = noise.dark_rate * duration
    singles_r = true_c + rng.poisson(extra_r + dark)
    singles_l = true_c + rng.poisson(extra_l + dark)
    return CountsRecord(qr, hr, ql, hl, int(true_c + acc), int(singles_r), int(singles_l),
                        float(duration), float(window), tag)


def simulate_settings(rho, settings, rate, duration, noise, seed=None,
                      window=DEFAULT_WINDOW, tags=None):
    """Simulate several settings with independent child seeds of ``seed``."""
    children = seed_sequence(seed).spawn(len(settings))
    tags = tags or [None] * len(settings)
    return [simulate_counts(rho, s, rate, duration, noise, np.random.default_rng(c),
                            window, t)
            for s, c, t in zip(settings, children, tags)]


def fringe_scan(rho, r_basis, hwp_l_grid, rate, duration, noise, seed=None,
                window=DEFAULT_WINDOW):
    """Scan the L half-wave plate with the R analyser fixed to ``r_basis``."""
    if r_basis not in FRINGE_BASES:
        raise ValueError(f"R basis must be one of {FRINGE_BASES}")
    grid = np.asarray(hwp_l_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty HWP grid")
    settings = [(r_basis, (0.0, float(t))) for t in grid]
    return simulate_settings(rho, settings, rate, duration, noise, seed, window)


@dataclass
class FringeFit:
    offset: float
    amplitude: float
    phase: float
    visibility: float
    visibility_err: float
    raw_visibility: float
    period: float = np.pi / 2
    covariance: np.ndarray = field(default=None, repr=False)

    def model(self, theta):
        return self.offset + self.amplitude * np.cos(4 * np.asarray(theta) - self.phase)


def fit_fringe(records, angles=None, max_iter=50):
    """Fit ``C = offset + amplitude cos(4 theta - phase)`` to an HWP scan.

    ``theta`` defaults to each record's L half-wave-plate angle.  The fit is
    Poisson maximum likelihood, solved by reweighted least squares with
    weights ``1 / max(model, 1)``; the visibility error comes from the final
    weighted covariance.
    """
    if angles is None:
        theta = np.array([r.hwp_l for r in records], dtype=float)
    else:
        theta = np.asarray(angles, dtype=float)
    y = np.array([r.coincidences if isinstance(r, CountsRecord) else r for r in records],
                 dtype=float)
    if y.size < 5:
        raise ValueError("fringe fit needs at least five points")
    if np.ptp(theta) < np.pi / 4 - 1e-12:
        raise ValueError("fringe scan must span at least half a period (pi/4 of HWP angle)")
    x = np.column_stack([np.ones_like(theta), np.cos(4 * theta), np.sin(4 * theta)])
    # weights from the data first, then from the model: the fixed point is the
    # Poisson maximum-likelihood fit, free of the low bias of data weights
    w = 1.0 / np.maximum(y, 1.0)
    for _ in range(max_iter):
        xtwx = x.T @ (x * w[:, None])
        if np.linalg.matrix_rank(xtwx) < 3:
            raise ValueError("fringe fit is underdetermined")
        cov = np.linalg.inv(xtwx)
        beta = cov @ (x.T @ (w * y))
        w_new = 1.0 / np.maximum(x @ beta, 1.0)
        if np.allclose(w_new, w, rtol=1e-10, atol=0):
            break
        w = w_new
    o, b1, b2 = beta
    amp = float(np.hypot(b1, b2))
    if o <= 0:
        raise ValueError("fitted fringe offset is not positive")
    vis = amp / o
    if amp > 0:
        grad = np.array([-amp / o ** 2, b1 / (amp * o), b2 / (amp * o)])
        err = float(np.sqrt(grad @ cov @ grad))
    else:
        err = float(np.sqrt(cov[1, 1] + cov[2, 2]) / o)
    return FringeFit(float(o), amp, float(np.arctan2(b2, b1)), float(min(max(vis, 0.0), 1.0)),
                     err, float(vis), covariance=cov)


def spectral_brightness(pair_rate, bandwidth_ghz, pump_power_mw, rate_unit="Hz"):
    """Pair rate per GHz of bandwidth per mW of pump, in Hz/(GHz mW)."""
    scale = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}
    if rate_unit not in scale:
        raise ValueError(f"unknown rate unit {rate_unit!r}")
    if bandwidth_ghz <= 0 or pump_power_mw <= 0:
        raise ValueError("bandwidth and pump power must be positive")
    if pair_rate <= 0:
        raise ValueError("pair rate must be positive")
    return pair_rate * scale[rate_unit] / (bandwidth_ghz * pump_power_mw)


@dataclass
class AccidentalCorrection:
    corrected: float
    accidentals: float
    floored: bool


def subtract_accidentals(record):
    """Remove ``S_R S_L window / T`` accidental coincidences, floored at zero."""
    acc = record.singles_r * record.singles_l * record.window / record.duration
    corr = record.coincidences - acc
    if corr < 0:
        return AccidentalCorrection(0.0, acc, True)
    return AccidentalCorrection(float(corr), acc, False)
