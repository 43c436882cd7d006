"""Jones calculus for the waveplates, beam-splitter ports and analysers.

Conventions
-----------
* Basis ``{H, V}`` with H along the crystal y axis and V along z.
* A retarder with fast axis at angle ``theta`` from H is
  ``R(-theta) @ diag(1, exp(i*delta)) @ R(theta)`` with
  ``R(theta) = [[cos, sin], [-sin, cos]]``; global phases are dropped.
  The quarter-wave plate is therefore ``diag(1, i)`` at ``theta = 0``.
* An analysis stack ``qwp(q) @ hwp(h)`` followed by a PBS transmitting H
  projects onto ``(qwp(q) @ hwp(h))^+ |H>``.

With these conventions the circular label ``R`` is ``(|H> - i|V>)/sqrt(2)``,
reached at ``q = +45 deg, h = 0``.
"""
from dataclasses import dataclass, field

import numpy as np

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)

_S2 = 1.0 / np.sqrt(2.0)

LABEL_STATES = {
    "H": H,
    "V": V,
    "D": _S2 * np.array([1.0, 1.0], dtype=complex),
    "A": _S2 * np.array([1.0, -1.0], dtype=complex),
    "R": _S2 * np.array([1.0, -1.0j]),
    "L": _S2 * np.array([1.0, 1.0j]),
}

# (qwp, hwp) analyser angles in radians realising each label; a convention,
# since the setup does not record the angles used.
LABEL_ANGLES = {
    "H": (0.0, 0.0),
    "V": (0.0, np.pi / 4),
    "D": (0.0, np.pi / 8),
    "A": (0.0, -np.pi / 8),
    "R": (np.pi / 4, 0.0),
    "L": (-np.pi / 4, 0.0),
}

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_angle(theta):
    if not np.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex)


def retarder_matrix(theta, retardance):
    """Linear retarder with fast axis at ``theta`` and the given retardance."""
    _check_angle(theta)
    core = np.diag([1.0, np.exp(1j * retardance)])
    return rotation(-theta) @ core @ rotation(theta)


def hwp_matrix(theta):
    """Half-wave plate, ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``."""
    _check_angle(theta)
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_matrix(theta):
    """Quarter-wave plate, ``diag(1, i)`` at ``theta = 0``."""
    return retarder_matrix(theta, np.pi / 2)


def pbs_port(port="transmit"):
    """Projector of one PBS output port: H is transmitted, V reflected."""
    if port == "transmit":
        return np.diag([1.0, 0.0]).astype(complex)
    if port == "reflect":
        return np.diag([0.0, 1.0]).astype(complex)
    raise ValueError(f"unknown PBS port {port!r}")


@dataclass
class PhaseSandwich:
    matrix: np.ndarray
    phase: float


def phase_sandwich(theta_hwp):
    """QWP(45) . HWP(theta) . QWP(45) with its relative H/V phase.

    The composite is diagonal up to a global phase; ``phase`` is
    ``arg(M_VV) - arg(M_HH)`` wrapped to ``(-pi, pi]``.
    """
    m = qwp_matrix(np.pi / 4) @ hwp_matrix(theta_hwp) @ qwp_matrix(np.pi / 4)
    phase = np.angle(m[1, 1] * np.conj(m[0, 0]))
    return PhaseSandwich(matrix=m, phase=float(phase))


@dataclass
class WaveplateStack:
    """Ordered waveplates; the first element acts first on the light."""

    elements: list = field(default_factory=list)

    def add(self, kind, theta):
        if kind not in ("HWP", "QWP"):
            raise ValueError(f"unknown element kind {kind!r}")
        _check_angle(theta)
        self.elements.append((kind, float(theta)))
        return self

    def matrix(self):
        m = np.eye(2, dtype=complex)
        for kind, theta in self.elements:
            el = hwp_matrix(theta) if kind == "HWP" else qwp_matrix(theta)
            m = el @ m
        return m


def analyser_state(qwp_angle, hwp_angle):
    """State transmitted by the analyser stack ``qwp(q) @ hwp(h)`` + PBS(H)."""
    _check_angle(qwp_angle)
    _check_angle(hwp_angle)
    stack = qwp_matrix(qwp_angle) @ hwp_matrix(hwp_angle)
    return stack.conj().T @ H


def projector(label=None, *, angles=None):
    """Rank-1 projector from a label in ``LABEL_STATES`` or a ``(q, h)`` pair."""
    if (label is None) == (angles is None):
        raise ValueError("give exactly one of label or angles")
    if label is not None:
        try:
            psi = LABEL_STATES[label]
        except KeyError:
            raise ValueError(f"unknown polarisation label {label!r}") from None
    else:
        q, h = angles
        psi = analyser_state(q, h)
    return np.outer(psi, psi.conj())


def bloch_projector(vec):
    """Projector onto the +1 eigenstate of ``vec . sigma``."""
    vec = np.asarray(vec, dtype=float)
    return 0.5 * (np.eye(2) + sum(c * PAULI[k] for c, k in zip(vec, "xyz")))


def overlap(a, b):
    """Phase-insensitive overlap ``|<a|b>|``."""
    return abs(np.vdot(a, b))


def is_unitary(m, tol=1e-12):
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)


def is_projector(m, tol=1e-12):
    return (np.allclose(m @ m, m, atol=tol, rtol=0)
            and np.allclose(m.conj().T, m, atol=tol, rtol=0))
