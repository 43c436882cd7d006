"""Two-photon polarisation states.

Kets and density matrices use the tensor ordering R-photon (x) L-photon and
the basis ``{HH, HV, VH, VV}``.
"""
from dataclasses import dataclass

import numpy as np

from .polarization import is_projector

BASIS_LABELS = ("HH", "HV", "VH", "VV")
BASIS_DOC = "R (x) L; rows/cols ordered HH, HV, VH, VV"
PHYS_TOL = 1e-10


class UnphysicalStateError(ValueError):
    pass


def eq1_state(phi):
    """``(|H>_R|V>_L + exp(i phi)|V>_R|H>_L) / sqrt(2)``."""
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    return np.array([0.0, 1.0, np.exp(1j * phi), 0.0]) / np.sqrt(2.0)


def singlet():
    return eq1_state(np.pi)


def ket_to_dm(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def check_physical(rho, tol=PHYS_TOL):
    """Raise :class:`UnphysicalStateError` unless ``rho`` is a density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise UnphysicalStateError(f"expected a 4x4 matrix, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        raise UnphysicalStateError("matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise UnphysicalStateError(f"trace {tr:.12g} != 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -tol:
        raise UnphysicalStateError(f"negative eigenvalue {lam:.3g}")
    return rho


def is_physical(rho, tol=PHYS_TOL):
    try:
        check_physical(rho, tol)
    except UnphysicalStateError:
        return False
    return True


def fidelity(rho, target):
    """Fidelity ``<t|rho|t>`` to a pure target ket."""
    check_physical(rho)
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    f = np.real(np.vdot(t, rho @ t))
    return float(min(max(f, 0.0), 1.0))


def werner_state(target, mix):
    """``mix |t><t| + (1 - mix) I/4``."""
    if not 0.0 <= mix <= 1.0:
        raise ValueError(f"mix must lie in [0, 1], got {mix}")
    return mix * ket_to_dm(target) + (1.0 - mix) * np.eye(4) / 4.0


def purity(rho):
    return float(np.real(np.trace(rho @ rho)))


def joint_probability(rho, proj_r, proj_l):
    """Probability ``Tr(rho (P_R (x) P_L))`` for rank-1 projectors."""
    for p in (proj_r, proj_l):
        if not is_projector(p, tol=1e-10) or abs(np.trace(p).real - 1.0) > 1e-10:
            raise ValueError("expected rank-1 projectors")
    p = np.real(np.trace(rho @ np.kron(proj_r, proj_l)))
    return float(min(max(p, 0.0), 1.0))


def marginal_probability(rho, proj, arm):
    """Single-arm probability of ``proj`` on arm ``'R'`` or ``'L'``."""
    op = np.kron(proj, np.eye(2)) if arm == "R" else np.kron(np.eye(2), proj)
    return float(min(max(np.real(np.trace(rho @ op)), 0.0), 1.0))


@dataclass
class NoiseModel:
    """Imperfections applied when synthesising counts.

    ``visibility_mix`` weights the target state against white noise;
    ``accidental_rate`` and ``dark_rate`` are in Hz.
    """

    visibility_mix: float = 1.0
    accidental_rate: float = 0.0
    efficiency_r: float = 1.0
    efficiency_l: float = 1.0
    dark_rate: float = 0.0

    def __post_init__(self):
        for name in ("visibility_mix", "efficiency_r", "efficiency_l"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("accidental_rate", "dark_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def state(self, target):
        return werner_state(target, self.visibility_mix)


def dm_to_json(rho):
    rho = np.asarray(rho)
    return {
        "basis": BASIS_DOC,
        "rho": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
    }


def dm_from_json(obj):
    arr = np.asarray(obj["rho"], dtype=float)
    if arr.shape != (4, 4, 2):
        raise ValueError(f"expected a 4x4 array of [re, im] pairs, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]
