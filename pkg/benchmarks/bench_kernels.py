"""Time the numba loop kernels against the vectorised numpy versions.

    python benchmarks/bench_kernels.py [--repeat N]

The numba timings exclude the first (compiling) call, which is reported
separately.
"""
import argparse
import time

import numpy as np

from bspdc import _accel, _kernels, tomography
from bspdc.state import ket_to_dm, singlet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    omega = 2 * np.pi * np.linspace(-400e9, 400e9, 8001)
    phi = np.sinc(omega * 62.4e-12 / np.pi).astype(complex)
    taus = np.linspace(-300e-12, 300e-12, 301)
    yield "hom_overlap (8001 x 301)", (
        lambda: _kernels.hom_overlap_nb(phi, omega, taus),
        lambda: _kernels.hom_overlap_np(phi, omega, taus))

    period, n_per = 1.3e-6, 1000
    walls = np.r_[np.repeat(np.arange(n_per) * period, 2) + np.tile([0, period / 2], n_per),
                  n_per * period]
    signs = np.tile([1.0, -1.0], n_per)
    q = 2 * np.pi * 3 / period + np.linspace(-2e4, 2e4, 401)
    yield "grating_sum (2000 domains x 401)", (
        lambda: _kernels.grating_sum_nb(q, walls, signs),
        lambda: _kernels.grating_sum_np(q, walls, signs))

    settings = tomography.build_settings()
    rho = 0.943 * ket_to_dm(singlet()) + 0.057 * np.eye(4) / 4
    counts = np.random.default_rng(0).poisson(
        1e4 * np.einsum("ij,vji->v", rho, settings.projectors).real).astype(float)
    proj = np.ascontiguousarray(settings.projectors)
    x0 = np.append(tomography.rho_to_params(np.eye(4) / 4), 0.0)
    args = (x0, proj, counts, 1e4, counts.sum(), 5000, 1e-8, 1e-12)
    yield "MLE BFGS (16 settings)", (
        lambda: _kernels.bfgs_nb(*args),
        lambda: _kernels.bfgs_np(*args))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"backend selected: {_accel.backend()}  (numba available: {_accel.HAS_NUMBA})")
    print(f"{'kernel':36s} {'first nb':>10s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, (f_nb, f_np) in cases():
        t0 = time.perf_counter()
        f_nb()
        first = time.perf_counter() - t0
        t_nb = best_of(f_nb, args.repeat)
        t_np = best_of(f_np, args.repeat)
        print(f"{name:36s} {first:10.4f} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
