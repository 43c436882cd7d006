"""Two-qubit state tomography from 16 product projections.

The maximum-likelihood fit parameterises ``rho = T^+ T / Tr(T^+ T)`` with
``T`` lower triangular (16 real numbers) and fits the count normalisation
``N`` as a 17th parameter, maximising the exact Poisson likelihood
``sum(n log mu - mu)`` with ``mu = N Tr(rho P)``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _kernels
from .coincidences import seed_sequence
from .polarization import projector
from .state import check_physical, dm_to_json, fidelity

TOMO_LABELS = ("H", "V", "D", "R")


class TomographyError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class TomographySettings:
    """Ordered product projectors; ``labels[k] = (R label, L label)``."""

    labels: list
    projectors: np.ndarray

    def __len__(self):
        return len(self.labels)

    def gram_rank(self):
        vecs = self.projectors.reshape(len(self), -1)
        return int(np.linalg.matrix_rank(vecs.conj() @ vecs.T))

    def complete_basis_indices(self):
        """Indices of the H/V product settings, one complete basis."""
        idx = [k for k, (a, b) in enumerate(self.labels) if a in "HV" and b in "HV"]
        return idx if len(idx) == 4 else None


def build_settings(labels=TOMO_LABELS):
    """Product projectors ordered with the R label outermost."""
    pairs = list(product(labels, repeat=2))
    proj = np.array([np.kron(projector(a), projector(b)) for a, b in pairs])
    settings = TomographySettings(pairs, proj)
    if settings.gram_rank() < 16:
        raise TomographyError("tomography settings are not informationally complete")
    return settings


def counts_vector(records, settings, tol=1e-6):
    """Order counts records to match ``settings`` by comparing projectors."""
    if not hasattr(records[0], "coincidences"):
        n = np.asarray(records, dtype=float)
        if n.shape != (len(settings),):
            raise TomographyError(f"expected {len(settings)} counts, got {n.shape}")
        return n
    out = np.full(len(settings), np.nan)
    for rec in records:
        op = np.kron(rec.projector_r(), rec.projector_l())
        dist = np.abs(settings.projectors - op).reshape(len(settings), -1).max(axis=1)
        k = int(np.argmin(dist))
        if dist[k] > tol:
            raise TomographyError(f"record with angles "
                                  f"{np.degrees([rec.qwp_r, rec.hwp_r, rec.qwp_l, rec.hwp_l])} "
                                  f"matches no tomography setting")
        if not np.isnan(out[k]):
            raise TomographyError(f"duplicate record for setting {settings.labels[k]}")
        out[k] = rec.coincidences
    missing = [settings.labels[k] for k in np.nonzero(np.isnan(out))[0]]
    if missing:
        raise TomographyError(f"missing settings: {missing}")
    return out


def _normalisation_guess(n, settings):
    idx = settings.complete_basis_indices()
    if idx is not None and n[idx].sum() > 0:
        return float(n[idx].sum())
    return float(n.sum()) / (len(settings) / 4.0)


def linear_inversion(counts, settings):
    """Unit-trace Hermitian estimate solving ``n_v / N = Tr(rho P_v)``.

    ``N`` is the count total of the H/V product settings, which form one
    complete basis.  The result need not be positive semidefinite.
    """
    n = counts_vector(counts, settings)
    if n.sum() <= 0:
        raise TomographyError("all counts are zero")
    big_n = _normalisation_guess(n, settings)
    a = np.array([p.T.ravel() for p in settings.projectors])
    if np.linalg.matrix_rank(a) < 16:
        raise TomographyError("measurement map is singular")
    x = np.linalg.solve(a, (n / big_n).astype(complex))
    rho = x.reshape(4, 4)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def project_to_physical(rho, floor=0.0):
    """Clip negative eigenvalues (to ``floor``) and renormalise."""
    h = 0.5 * (rho + rho.conj().T)
    lam, vec = np.linalg.eigh(h)
    lam = np.clip(lam, floor, None)
    out = (vec * lam) @ vec.conj().T
    return out / np.trace(out).real


def rho_to_params(rho):
    """Cholesky parameters with ``rho = T^+ T`` and ``T`` lower triangular."""
    j = np.eye(4)[::-1]
    low = np.linalg.cholesky(j @ rho @ j)
    t = (j @ low @ j).conj().T
    x = np.empty(16)
    x[:4] = np.diag(t).real
    off = t[_kernels.T_OFFDIAG[:, 0], _kernels.T_OFFDIAG[:, 1]]
    x[4:16:2] = off.real
    x[5:16:2] = off.imag
    return x


def params_to_rho(x):
    t = _kernels.t_matrix_np(np.asarray(x[:16], dtype=float))
    g = t.conj().T @ t
    g = 0.5 * (g + g.conj().T)
    return g / np.trace(g).real


def log_likelihood(rho, big_n, counts, settings):
    """``sum(n log mu - mu)`` with ``mu = N Tr(rho P)`` (constant terms dropped)."""
    n = counts_vector(counts, settings)
    p = np.einsum("ij,vji->v", rho, settings.projectors).real
    mu = big_n * p
    return float(np.sum(n * np.log(np.maximum(mu, _kernels.LOG_FLOOR)) - mu))


@dataclass
class TomographyResult:
    rho: np.ndarray
    normalization: float
    log_likelihood: float
    iterations: int
    converged: bool
    status: int
    fidelity: float = None
    fidelity_std: float = None
    rho_std_real: np.ndarray = field(default=None, repr=False)
    rho_std_imag: np.ndarray = field(default=None, repr=False)
    mc_samples: int = 0
    mc_failures: int = 0

    def to_json(self):
        out = dm_to_json(self.rho)
        out.update({
            "normalization": self.normalization,
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "fidelity": self.fidelity,
            "fidelity_std": self.fidelity_std,
            "mc_samples": self.mc_samples,
            "mc_failures": self.mc_failures,
        })
        if self.rho_std_real is not None:
            out["rho_std_real"] = self.rho_std_real.tolist()
            out["rho_std_imag"] = self.rho_std_imag.tolist()
        return out


STATUS_TEXT = {0: "gradient norm below tolerance", 1: "step below tolerance",
               2: "iteration limit reached"}


def mle_reconstruct(counts, settings, target=None, max_iter=5000, gtol=1e-8, xtol=1e-12,
                    init_floor=1e-6):
    """Maximum-likelihood density matrix, physical by construction.

    Raises :class:`ConvergenceError` (carrying the best-so-far result) when the
    iteration limit is hit.
    """
    n = counts_vector(counts, settings)
    total = float(n.sum())
    if total <= 0:
        raise TomographyError("all counts are zero")
    n0 = _normalisation_guess(n, settings)
    rho0 = project_to_physical(linear_inversion(n, settings), floor=init_floor)
    x0 = np.append(rho_to_params(rho0), 0.0)
    proj = np.ascontiguousarray(settings.projectors, dtype=np.complex128)
    x, f, _gnorm, it, status = _kernels.bfgs(x0, proj, n, n0, total, max_iter, gtol, xtol)
    rho = params_to_rho(x)
    big_n = n0 * float(np.exp(x[16]))
    result = TomographyResult(rho=rho, normalization=big_n,
                              log_likelihood=log_likelihood(rho, big_n, n, settings),
                              iterations=int(it), converged=status != 2, status=int(status))
    if target is not None:
        result.fidelity = fidelity(rho, target)
    if status == 2:
        raise ConvergenceError(f"MLE did not converge in {max_iter} iterations", result)
    check_physical(rho)
    return result


def poisson_error_bars(counts, settings, target, resamples=100, seed=None, workers=1,
                       result=None, **mle_kwargs):
    """Fidelity and element-wise standard deviations by Poisson resampling.

    Each resample draws ``n_v' ~ Poisson(n_v)`` with its own child seed of
    ``seed`` and repeats the MLE fit.  More than 10% failed fits abort.
    """
    if resamples < 50:
        raise ValueError("use at least 50 resamples")
    n = counts_vector(counts, settings)
    if result is None:
        result = mle_reconstruct(n, settings, target, **mle_kwargs)
    children = seed_sequence(seed).spawn(resamples)

    def one(child):
        sample = np.random.default_rng(child).poisson(n).astype(float)
        try:
            return mle_reconstruct(sample, settings, target, **mle_kwargs)
        except (ConvergenceError, TomographyError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(one, children))
    else:
        fits = [one(c) for c in children]
    good = [r for r in fits if r is not None]
    failures = resamples - len(good)
    if failures > 0.1 * resamples:
        raise ConvergenceError(f"{failures} of {resamples} resampled fits failed", result)
    rhos = np.array([r.rho for r in good])
    result.rho_std_real = rhos.real.std(axis=0, ddof=1)
    result.rho_std_imag = rhos.imag.std(axis=0, ddof=1)
    if target is not None:
        fids = np.array([r.fidelity for r in good])
        result.fidelity_std = float(fids.std(ddof=1))
    result.mc_samples = len(good)
    result.mc_failures = failures
    return result


def bar_chart_rows(rho):
    """Rows ``(row_label, col_label, real, imag)`` in the 4x4 bar-chart layout."""
    from .state import BASIS_LABELS
    return [(BASIS_LABELS[i], BASIS_LABELS[j], float(rho[i, j].real), float(rho[i, j].imag))
            for i in range(4) for j in range(4)]
