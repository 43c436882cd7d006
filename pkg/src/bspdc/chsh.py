"""CHSH Bell test from coincidence counts.

The analyser directions are Bloch vectors: ``a = z``, ``a' = x`` on the L
photon and ``b, b' = (x +- z)/sqrt(2)`` on the R photon.  For the singlet
these give ``S = 2 sqrt(2)``.
"""
from dataclasses import dataclass

import numpy as np

from .coincidences import CountsRecord, simulate_settings
from .polarization import PAULI
from .state import check_physical

SQRT2 = np.sqrt(2.0)

A = np.array([0.0, 0.0, 1.0])
A_PRIME = np.array([1.0, 0.0, 0.0])
B = np.array([1.0, 0.0, 1.0]) / SQRT2
B_PRIME = np.array([1.0, 0.0, -1.0]) / SQRT2

# (name, L direction, R direction) in the order E(a,b), E(a,b'), E(a',b), E(a',b').
SETTING_PAIRS = (
    ("ab", A, B),
    ("abp", A, B_PRIME),
    ("apb", A_PRIME, B),
    ("apbp", A_PRIME, B_PRIME),
)
SIGNS = ("++", "+-", "-+", "--")


def _check_unit(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("analyser direction must be a real unit 3-vector")
    return v


@dataclass(frozen=True)
class PauliSetting:
    """Analyser direction on the Bloch sphere and the selected output port."""

    direction: tuple
    sign: int = 1

    def __post_init__(self):
        _check_unit(self.direction)
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def waveplates(self):
        """``(qwp, hwp)`` analyser angles; only x-z plane directions are realisable
        with a half-wave plate alone."""
        x, y, z = np.asarray(self.direction, dtype=float) * self.sign
        if abs(y) > 1e-12:
            raise ValueError("only directions in the x-z plane map to HWP angles")
        return 0.0, float(np.arctan2(x, z) / 4.0)


def sigma_dot(v):
    v = _check_unit(v)
    return v[0] * PAULI["x"] + v[1] * PAULI["y"] + v[2] * PAULI["z"]


def predict_E(rho, a, b):
    """``Tr(rho (b.sigma)_R (x) (a.sigma)_L)``: ``a`` acts on L, ``b`` on R."""
    check_physical(rho)
    op = np.kron(sigma_dot(b), sigma_dot(a))
    return float(np.real(np.trace(rho @ op)))


def predict_S(rho):
    e = [predict_E(rho, a, b) for _, a, b in SETTING_PAIRS]
    return abs(e[0] - e[1] + e[2] + e[3])


def correlation_E(c_pp, c_pm, c_mp, c_mm):
    """Correlation coefficient and its first-order Poisson error."""
    counts = np.array([c_pp, c_pm, c_mp, c_mm], dtype=float)
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("all four counts are zero")
    same = counts[0] + counts[3]
    diff = counts[1] + counts[2]
    e = (same - diff) / total
    std = 2.0 * np.sqrt(same * diff / total ** 3)
    return float(e), float(std)


@dataclass
class ChshResult:
    E: tuple
    E_std: tuple
    S: float
    std_S: float
    sigma_violation: float

    def to_json(self):
        return {"E": list(self.E), "E_std": list(self.E_std), "S": self.S,
                "std_S": self.std_S, "sigma_violation": self.sigma_violation,
                "violates_local_bound": bool(self.S > 2.0)}


def sigma_violation(s, std_s):
    return (abs(s) - 2.0) / std_s if std_s > 0 else float("nan")


def chsh_S(e_ab, e_abp, e_apb, e_apbp):
    """``S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|`` with quadrature error."""
    es = [e_ab, e_abp, e_apb, e_apbp]
    vals = tuple(float(e[0]) for e in es)
    stds = tuple(float(e[1]) for e in es)
    s = abs(vals[0] - vals[1] + vals[2] + vals[3])
    std = float(np.sqrt(sum(x * x for x in stds)))
    return ChshResult(vals, stds, s, std, sigma_violation(s, std))


def bell_settings():
    """16 ``(arm_R, arm_L)`` analyser settings and their tags."""
    settings, tags = [], []
    for name, a, b in SETTING_PAIRS:
        for signs in SIGNS:
            sa = 1 if signs[0] == "+" else -1
            sb = 1 if signs[1] == "+" else -1
            arm_l = PauliSetting(tuple(a), sa).waveplates()
            arm_r = PauliSetting(tuple(b), sb).waveplates()
            settings.append((arm_r, arm_l))
            tags.append(f"{name}:{signs}")
    return settings, tags


def analyze_bell_records(records):
    """CHSH result from 16 records tagged ``"<pair>:<signs>"``."""
    if len(records) != 16:
        raise ValueError(f"CHSH analysis needs 16 records, got {len(records)}")
    table = {}
    for rec in records:
        if not isinstance(rec, CountsRecord) or not rec.tag:
            raise ValueError("every CHSH record needs a setting tag")
        if rec.tag in table:
            raise ValueError(f"duplicate CHSH tag {rec.tag!r}")
        table[rec.tag] = rec.coincidences
    es = []
    for name, _, _ in SETTING_PAIRS:
        try:
            es.append(correlation_E(*(table[f"{name}:{s}"] for s in SIGNS)))
        except KeyError as exc:
            raise ValueError(f"missing CHSH record {exc.args[0]!r}") from None
    return chsh_S(*es)


def run_bell_experiment(rho, rate, duration, noise, seed=None, return_records=False):
    """Simulate the 16 CHSH coincidence measurements and analyse them."""
    settings, tags = bell_settings()
    records = simulate_settings(rho, settings, rate, duration, noise, seed, tags=tags)
    result = analyze_bell_records(records)
    return (result, records) if return_records else result
