import numpy as np
import pytest

from bspdc import coincidences as cs
from bspdc.state import NoiseModel, ket_to_dm, singlet, werner_state

SINGLET = ket_to_dm(singlet())
IDEAL = NoiseModel()
GRID = np.linspace(0.0, np.pi, 37)


def test_poisson_mean_matches_expectation():
    setting = ("D", (0.0, 0.3))
    noise = NoiseModel(accidental_rate=2.0, efficiency_r=0.8, efficiency_l=0.7)
    mu = cs.expected_coincidences(SINGLET, setting, 50.0, 1.0, noise)
    draws = [cs.simulate_counts(SINGLET, setting, 50.0, 1.0, noise, seed=k).coincidences
             for k in range(10000)]
    assert np.mean(draws) == pytest.approx(mu, abs=4 * np.sqrt(mu / 10000))
    assert np.var(draws) == pytest.approx(mu, rel=0.05)


def test_singles_not_below_coincidences():
    noise = NoiseModel(dark_rate=10.0)
    for k in range(50):
        r = cs.simulate_counts(SINGLET, ("H", "V"), 1000.0, 1.0, noise, seed=k)
        assert r.singles_r >= r.coincidences and r.singles_l >= r.coincidences


def test_seed_determinism():
    settings = [("H", "V"), ("D", "A"), ("R", "L")]
    a = cs.simulate_settings(SINGLET, settings, 1000.0, 1.0, IDEAL, seed=5)
    b = cs.simulate_settings(SINGLET, settings, 1000.0, 1.0, IDEAL,
                             seed=np.random.SeedSequence(5))
    c = cs.simulate_settings(SINGLET, settings, 1000.0, 1.0, IDEAL, seed=6)
    assert a == b
    assert a != c


def test_simulate_rejects_bad_input():
    with pytest.raises(ValueError):
        cs.simulate_counts(SINGLET, ("H", "X"), 1.0, 1.0, IDEAL)
    with pytest.raises(ValueError):
        cs.simulate_counts(SINGLET, ("H", (0.0, np.nan)), 1.0, 1.0, IDEAL)
    with pytest.raises(ValueError):
        cs.simulate_counts(SINGLET, ("H", "V"), -1.0, 1.0, IDEAL)
    with pytest.raises(ValueError):
        cs.CountsRecord(0, 0, 0, 0, -1)


@pytest.mark.parametrize("basis", cs.FRINGE_BASES)
def test_singlet_fringes_cos2(basis):
    # C(theta) proportional to sin^2(2 (theta - theta_R)) for the singlet
    mu = np.array([cs.expected_coincidences(SINGLET, (basis, (0.0, t)), 1000.0, 1.0, IDEAL)
                   for t in GRID])
    fit = cs.fit_fringe(mu, GRID)
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(fit.model(GRID), mu, atol=1e-9)
    assert fit.offset == pytest.approx(250.0)


@pytest.mark.parametrize("mix", [0.5, 0.9, 0.97])
def test_werner_fringe_visibility_exact(mix):
    rho = werner_state(singlet(), mix)
    mu = [cs.expected_coincidences(rho, ("D", (0.0, t)), 1000.0, 1.0, IDEAL) for t in GRID]
    assert cs.fit_fringe(mu, GRID).raw_visibility == pytest.approx(mix, abs=1e-12)


def test_fit_visibility_error_calibrated():
    rho = werner_state(singlet(), 0.9)
    pulls = []
    for k in range(200):
        recs = cs.fringe_scan(rho, "H", GRID, 1000.0, 1.0, IDEAL, seed=k)
        fit = cs.fit_fringe(recs)
        pulls.append((fit.raw_visibility - 0.9) / fit.visibility_err)
    assert abs(np.mean(pulls)) < 0.3
    assert 0.8 < np.std(pulls) < 1.2


def test_fit_fringe_input_checks():
    with pytest.raises(ValueError):
        cs.fit_fringe([1, 2, 3], [0, 0.1, 0.2])
    with pytest.raises(ValueError):
        cs.fit_fringe(np.ones(6), np.linspace(0, 0.1, 6))
    with pytest.raises(ValueError):
        cs.fringe_scan(SINGLET, "R", GRID, 1.0, 1.0, IDEAL)


def test_spectral_brightness():
    assert cs.spectral_brightness(3400.0, 1.0, 1.0) == pytest.approx(3400.0)
    assert cs.spectral_brightness(24.14, 7.1, 1.0, "kHz") == pytest.approx(3400.0)
    with pytest.raises(ValueError):
        cs.spectral_brightness(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        cs.spectral_brightness(1.0, 1.0, 1.0, "GHz")


def test_accidental_subtraction():
    rec = cs.CountsRecord(0, 0, 0, 0, 500, 100000, 200000, 10.0, 1e-9)
    out = cs.subtract_accidentals(rec)
    assert out.accidentals == pytest.approx(2.0)
    assert out.corrected == pytest.approx(498.0)
    low = cs.subtract_accidentals(cs.CountsRecord(0, 0, 0, 0, 1, 10 ** 6, 10 ** 6, 1.0, 1e-9))
    assert low.floored and low.corrected == 0.0


def test_constructed_max_min_fringe():
    mu = 0.5 * (1260 + 22) + 0.5 * (1260 - 22) * np.cos(4 * GRID)
    fit = cs.fit_fringe(mu, GRID)
    assert fit.visibility == pytest.approx((1260 - 22) / (1260 + 22), abs=1e-9)
    assert round(fit.visibility, 3) == 0.966


def test_fringe_phase_and_scale_invariance():
    shift = np.radians(17.0)
    mu = 300 + 250 * np.cos(4 * GRID - shift)
    fit = cs.fit_fringe(mu, GRID)
    assert np.degrees(abs(fit.phase - shift)) < 1.0
    assert cs.fit_fringe(7 * mu, GRID).visibility == pytest.approx(fit.visibility, abs=1e-12)


def test_singlet_setting_examples():
    assert cs.expected_coincidences(SINGLET, ("H", "H"), 2000.0, 1.0, IDEAL) == 0.0
    assert cs.simulate_counts(SINGLET, ("H", "H"), 2000.0, 1.0, IDEAL, seed=0).coincidences == 0
    assert cs.expected_coincidences(SINGLET, ("H", "V"), 2000.0, 1.0, IDEAL) == pytest.approx(1000)


def test_complete_basis_sums_to_pairs(rng):
    noise = NoiseModel(efficiency_r=0.6, efficiency_l=0.9)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    for a, b in (("H", "V"), ("D", "A"), ("R", "L")):
        total = sum(cs.expected_coincidences(rho, (x, y), 500.0, 2.0, noise)
                    for x in (a, b) for y in (a, b))
        assert total == pytest.approx(500 * 2 * 0.6 * 0.9, abs=1e-9)


def test_singlet_d_fringe_shifted():
    mu_h = np.array([cs.expected_coincidences(SINGLET, ("H", (0.0, t)), 1.0, 1.0, IDEAL)
                     for t in GRID])
    mu_d = np.array([cs.expected_coincidences(SINGLET, ("D", (0.0, t)), 1.0, 1.0, IDEAL)
                     for t in GRID + np.pi / 8])
    assert np.allclose(mu_h, np.sin(2 * GRID) ** 2 / 2, atol=1e-12)
    assert np.allclose(mu_h, mu_d, atol=1e-12)


def test_accidental_examples():
    rec = cs.CountsRecord(0, 0, 0, 0, 100, 100000, 100000, 1.0, 1e-9)
    assert cs.subtract_accidentals(rec).accidentals == pytest.approx(10.0)
    raw = cs.CountsRecord(0, 0, 0, 0, 100, 0, 0, 1.0, 1e-9)
    assert cs.subtract_accidentals(raw).corrected == 100.0
    assert cs.spectral_brightness(2 * 2.414e4, 7.1, 1.0) == pytest.approx(2 * 3.4e3)
