"""Hong-Ou-Mandel dip from a biphoton spectrum.

For a CW pump at degeneracy the signal and idler detunings are
anti-correlated, so the coincidence probability behind a 50:50 coupler is::

    P(tau) = 1/2 [1 - kappa Re( sum phi(W) phi*(-W) exp(-2 i W tau) / sum |phi|^2 )]

with ``kappa`` the mode indistinguishability.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .spectrum import SINC2_HALF_MAX_X


class FitError(RuntimeError):
    pass


@dataclass
class HomTrace:
    delay: np.ndarray
    probability: np.ndarray
    counts: np.ndarray = None
    visibility: float = None
    base_width: float = None
    fit: dict = field(default_factory=dict)


def hom_trace(spec, delay_grid, indistinguishability=1.0):
    """Coincidence probability versus delay for the spectral amplitude ``spec``."""
    kappa = float(indistinguishability)
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("indistinguishability must lie in [0, 1]")
    taus = np.asarray(delay_grid, dtype=float)
    if taus.size == 0:
        raise ValueError("empty delay grid")
    w = spec.detuning
    if not np.allclose(w[::-1], -w, rtol=0, atol=1e-9 * np.max(np.abs(w))):
        raise ValueError("spectral grid must be symmetric about zero detuning")
    overlap = _kernels.hom_overlap(spec.amplitude, w, taus)
    prob = 0.5 * (1.0 - kappa * overlap.real)
    return HomTrace(taus, prob)


def triangle_dip(tau, baseline, visibility, center, half_width):
    """``baseline * (1 - V * max(0, 1 - |tau - t0| / w))``."""
    tri = np.clip(1.0 - np.abs(tau - center) / half_width, 0.0, None)
    return baseline * (1.0 - visibility * tri)


def fit_triangle(trace, values=None):
    """Least-squares triangle fit of a HOM dip.

    Returns ``(base_width, visibility)`` where the base-to-base width is twice
    the fitted half width and ``V = (P_out - P_min) / P_out``, capped at 1
    since counts cannot dip below zero.  Fit parameters are stored on
    ``trace.fit``.
    """
    scale = float(np.max(np.abs(trace.delay))) or 1.0
    tau = np.asarray(trace.delay, dtype=float) / scale
    y = np.asarray(trace.probability if values is None else values, dtype=float)
    if tau.size < 5:
        raise FitError("need at least five delay points")
    i_min = int(np.argmin(y))
    edge = max(1, tau.size // 10)
    base0 = float(np.median(np.r_[y[:edge], y[-edge:]]))
    if base0 <= 0:
        raise FitError("non-positive baseline; no dip to fit")
    v0 = (base0 - y[i_min]) / base0
    below = np.nonzero(y < base0 - 0.5 * (base0 - y[i_min]))[0]
    w0 = max(float(tau[below[-1]] - tau[below[0]]), 2 * float(np.median(np.diff(tau))))

    def resid(p):
        return triangle_dip(tau, *p) - y

    res = least_squares(resid, [base0, v0, tau[i_min], w0],
                        bounds=([0, -1, tau[0], 1e-3 * w0], [np.inf, 1.0, tau[-1], np.inf]),
                        x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=5000)
    if not res.success:
        raise FitError(f"triangle fit did not converge: {res.message}")
    baseline, vis, center, half = res.x
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    if rms > 0.25 * abs(baseline * vis) and vis > 0:
        raise FitError(f"triangle fit residual too large (rms {rms:.3g})")
    trace.visibility = float(vis)
    trace.base_width = float(2 * half * scale)
    trace.fit = {"baseline": float(baseline), "visibility": float(vis),
                 "center": float(center * scale), "half_width": float(half * scale),
                 "rms": rms}
    return trace.base_width, trace.visibility


def visibility_with_accidentals(raw_min, raw_out, accidental_level):
    """Raw and accidental-subtracted dip visibility."""
    if not raw_out > raw_min >= 0:
        raise ValueError("need raw_out > raw_min >= 0")
    if accidental_level < 0:
        raise ValueError("accidental level must be non-negative")
    if accidental_level > raw_min:
        raise ValueError("accidental level exceeds the dip minimum; corrected counts negative")
    raw = (raw_out - raw_min) / raw_out
    out_c = raw_out - accidental_level
    corrected = (out_c - (raw_min - accidental_level)) / out_c
    return raw, corrected


def triangle_half_width(alpha):
    """Closed-form dip half width for the amplitude ``sinc(alpha * W)``."""
    return alpha


def alpha_for_bandwidth(fwhm_hz):
    """``alpha`` such that ``sinc(alpha W)^2`` has the given FWHM in Hz."""
    return SINC2_HALF_MAX_X / (np.pi * fwhm_hz)
