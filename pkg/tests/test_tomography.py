import numpy as np
import pytest

from bspdc import coincidences, tomography as tomo
from bspdc.state import NoiseModel, is_physical, ket_to_dm, purity, singlet, werner_state

SINGLET = ket_to_dm(singlet())
SETTINGS = tomo.build_settings()
PAIRS = list(SETTINGS.labels)


def exact_counts(rho, n=1e4):
    return n * np.einsum("ij,vji->v", rho, SETTINGS.projectors).real


def noisy_counts(rho, n, seed):
    recs = coincidences.simulate_settings(rho, PAIRS, n, 1.0, NoiseModel(), seed=seed)
    return tomo.counts_vector(recs, SETTINGS)


def test_settings_complete():
    assert len(SETTINGS) == 16
    assert SETTINGS.gram_rank() == 16
    assert np.allclose(SETTINGS.projectors[0], np.diag([1, 0, 0, 0]))
    r = np.array([1, -1j]) / np.sqrt(2)
    rr = np.kron(np.outer(r, r.conj()), np.outer(r, r.conj()))
    assert np.allclose(SETTINGS.projectors[PAIRS.index(("R", "R"))], rr)


def test_incomplete_settings_rejected():
    with pytest.raises(tomo.TomographyError):
        tomo.build_settings(("H", "V", "D", "A"))


@pytest.mark.parametrize("rho", [np.eye(4) / 4, SINGLET], ids=["mixed", "singlet"])
def test_linear_inversion_exact(rho):
    assert np.allclose(tomo.linear_inversion(exact_counts(rho), SETTINGS), rho, atol=1e-10)


def test_linear_inversion_can_be_unphysical():
    lams = [np.linalg.eigvalsh(tomo.linear_inversion(noisy_counts(SINGLET, 500, k), SETTINGS))
            .min() for k in range(5)]
    assert min(lams) < 0


def test_counts_vector_matches_records_by_angles():
    recs = coincidences.simulate_settings(SINGLET, PAIRS, 100, 1.0, NoiseModel(), seed=1)
    n = tomo.counts_vector(recs[::-1], SETTINGS)
    assert list(n) == [r.coincidences for r in recs]
    with pytest.raises(tomo.TomographyError, match="missing"):
        tomo.counts_vector(recs[:15], SETTINGS)
    with pytest.raises(tomo.TomographyError, match="duplicate"):
        tomo.counts_vector(recs + recs[:1], SETTINGS)
    with pytest.raises(tomo.TomographyError):
        tomo.counts_vector(np.ones(15), SETTINGS)


def test_zero_counts_rejected():
    with pytest.raises(tomo.TomographyError):
        tomo.mle_reconstruct(np.zeros(16), SETTINGS)


def test_cholesky_round_trip(rng):
    for _ in range(20):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        assert np.allclose(tomo.params_to_rho(tomo.rho_to_params(rho)), rho, atol=1e-12)


def test_mle_exact_singlet():
    res = tomo.mle_reconstruct(exact_counts(SINGLET), SETTINGS, singlet())
    assert res.converged
    assert res.fidelity >= 0.9999


def test_mle_physical_and_beats_projected_inversion():
    for k in range(10):
        n = noisy_counts(werner_state(singlet(), 0.9), 300, k)
        res = tomo.mle_reconstruct(n, SETTINGS)
        assert is_physical(res.rho)
        rho_li = tomo.project_to_physical(tomo.linear_inversion(n, SETTINGS))
        n_li = res.normalization
        best_li = max(tomo.log_likelihood(rho_li, n_li * s, n, SETTINGS)
                      for s in np.linspace(0.8, 1.2, 41))
        assert res.log_likelihood >= best_li - 1e-9


def test_mle_scaling_invariance():
    n = noisy_counts(werner_state(singlet(), 0.9), 2000, 3)
    a = tomo.mle_reconstruct(n, SETTINGS)
    b = tomo.mle_reconstruct(10 * n, SETTINGS)
    assert np.allclose(a.rho, b.rho, atol=1e-6)
    assert b.normalization == pytest.approx(10 * a.normalization, rel=1e-6)


def test_mle_converges_with_counts():
    rho = werner_state(singlet(), 0.9)
    errs = []
    for n in (1e3, 1e4, 1e5):
        dev = [np.linalg.norm(tomo.mle_reconstruct(noisy_counts(rho, n, k), SETTINGS).rho - rho)
               for k in range(10)]
        errs.append(np.mean(dev))
    assert errs[0] > errs[1] > errs[2]


def test_mixed_state_purity():
    res = tomo.mle_reconstruct(noisy_counts(np.eye(4) / 4, 1e5, 0), SETTINGS)
    assert purity(res.rho) <= 0.27


def test_max_iter_reports_best_so_far():
    with pytest.raises(tomo.ConvergenceError) as exc:
        tomo.mle_reconstruct(noisy_counts(SINGLET, 1e3, 0), SETTINGS, singlet(), max_iter=2)
    assert exc.value.result is not None and is_physical(exc.value.result.rho)


def test_error_bars_deterministic_and_scale():
    rho = werner_state(singlet(), 0.943)
    n1 = noisy_counts(rho, 1e4, 11)
    a = tomo.poisson_error_bars(n1, SETTINGS, singlet(), resamples=60, seed=2)
    b = tomo.poisson_error_bars(n1, SETTINGS, singlet(), resamples=60, seed=2, workers=2)
    assert a.fidelity_std == b.fidelity_std
    assert 0.002 < a.fidelity_std < 0.02
    assert a.rho_std_real.shape == (4, 4) and np.all(a.rho_std_real >= 0)
    # doubling the counts shrinks the error by about sqrt(2)
    s1 = np.mean([tomo.poisson_error_bars(noisy_counts(rho, 1e4, k), SETTINGS, singlet(),
                                          resamples=60, seed=k).fidelity_std for k in range(8)])
    s2 = np.mean([tomo.poisson_error_bars(noisy_counts(rho, 2e4, k), SETTINGS, singlet(),
                                          resamples=60, seed=k).fidelity_std for k in range(8)])
    assert s1 / s2 == pytest.approx(np.sqrt(2), rel=0.2)


def test_error_bars_vanish_at_huge_counts():
    res = tomo.poisson_error_bars(exact_counts(werner_state(singlet(), 0.9), 1e8), SETTINGS,
                                  singlet(), resamples=50, seed=0)
    assert res.fidelity_std <= 1e-3


def test_error_bars_need_resamples():
    with pytest.raises(ValueError):
        tomo.poisson_error_bars(exact_counts(SINGLET), SETTINGS, singlet(), resamples=10)


def test_result_json_and_bars():
    res = tomo.mle_reconstruct(exact_counts(SINGLET), SETTINGS, singlet())
    doc = res.to_json()
    assert doc["fidelity"] == res.fidelity and len(doc["rho"]) == 4
    rows = tomo.bar_chart_rows(res.rho)
    assert len(rows) == 16 and rows[0][:2] == ("HH", "HH")
