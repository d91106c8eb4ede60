import numpy as np
import pytest

from thzunmix.core import FrequencyGrid, Sample, SpectrumSet, TimeTrace, default_grid
from thzunmix.preprocess import (
    absorption_spectrum,
    affine_fit,
    alpha_max,
    fft_spectrum,
    standardize,
    transfer_magnitude,
)
from thzunmix.synth import forward_mix, make_signature, material_library, reference_pulse

# 0.05 ps x 2000 samples puts DFT bins on a 0.01 THz grid
T_STEP, N = 0.05, 2000


def direct_dft(x, t_step, freqs):
    t = t_step * np.arange(x.size)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * t)) for f in freqs])


def test_cosine_peaks_at_its_bin():
    t = T_STEP * np.arange(N)
    tr = TimeTrace(T_STEP, np.cos(2 * np.pi * 1.0 * t))
    grid = FrequencyGrid(0.5, 0.01, 101)
    mag = np.abs(fft_spectrum(tr, grid))
    assert grid.frequencies[np.argmax(mag)] == pytest.approx(1.0)


def test_zero_trace():
    assert np.all(fft_spectrum(TimeTrace(T_STEP, np.zeros(N)), default_grid()) == 0)


def test_fft_matches_direct_summation(rng):
    x = rng.normal(size=N)
    g = default_grid()
    fast = fft_spectrum(TimeTrace(T_STEP, x), g)
    slow = direct_dft(x, T_STEP, g.frequencies)
    assert np.abs(fast - slow).max() <= 1e-10 * np.abs(slow).max()


def test_grid_beyond_nyquist():
    with pytest.raises(ValueError, match="Nyquist"):
        fft_spectrum(TimeTrace(1.0, np.zeros(64)), FrequencyGrid(0.2, 0.1, 10))


def test_transfer_magnitude(rng):
    X = rng.normal(size=8) + 1j * rng.normal(size=8)
    np.testing.assert_allclose(transfer_magnitude(X, X), 1.0)
    np.testing.assert_allclose(transfer_magnitude(0.5 * X, X), 0.5)
    X[3] = 0
    with pytest.raises(ValueError, match="zero"):
        transfer_magnitude(np.ones(8), X)


def test_forward_model_transfer_is_amplitude_decay():
    g = default_grid()
    lac = material_library()["lactose"]
    pulse = reference_pulse(T_STEP, N)
    X = fft_spectrum(pulse, g)
    d = 1.7
    H = transfer_magnitude(forward_mix([lac], [d], pulse, g), X)
    np.testing.assert_allclose(H, np.exp(-0.5 * make_signature(lac, g) * d / 10.0), rtol=1e-8, atol=0)


def test_absorption_examples():
    np.testing.assert_allclose(absorption_spectrum(np.full(5, np.exp(-1.0)), 2.0), 10.0)
    np.testing.assert_array_equal(absorption_spectrum(np.ones(3), 1.0), 0.0)
    with pytest.raises(ValueError):
        absorption_spectrum(np.array([0.5, 0.0]), 1.0)
    with pytest.raises(ValueError):
        absorption_spectrum(np.ones(2), 0.0)


def test_lactose_signature_recovered():
    g = default_grid()
    lac = material_library()["lactose"]
    pulse = reference_pulse(T_STEP, N)
    X = fft_spectrum(pulse, g)
    alpha = absorption_spectrum(transfer_magnitude(forward_mix([lac], [3.05], pulse, g), X), 3.05)
    assert np.abs(alpha - make_signature(lac, g)).max() < 1e-6


def _two_layer_set():
    g = default_grid()
    lib = material_library()
    mats = [lib["glucose"], lib["tyrosine"]]
    pulse = reference_pulse(T_STEP, N)
    X = fft_spectrum(pulse, g)
    rows = [("g", [2.0, 0.0], 2.0), ("g2", [4.0, 0.0], 4.0), ("t", [0.0, 3.0], 3.0), ("mix", [1.0, 2.05], 3.05)]
    samples = tuple(Sample(forward_mix(mats, d, pulse, g), dt, lb) for lb, d, dt in rows)
    return SpectrumSet(g, X, samples), mats, g


def test_standardize_examples():
    s, mats, g = _two_layer_set()
    Z = standardize(s)
    same = standardize(SpectrumSet(g, s.reference, (Sample(s.reference, 2.0, "ref"),)))
    np.testing.assert_array_equal(same.X, 0.0)
    np.testing.assert_allclose(Z.X[:, 0], Z.X[:, 1], rtol=0, atol=1e-10)
    w = np.array([1.0, 2.05]) / 3.05
    expected = w[0] * Z.X[:, 0] + w[1] * Z.X[:, 2]
    np.testing.assert_allclose(Z.X[:, 3], expected, rtol=0, atol=1e-8)
    np.testing.assert_allclose(Z.half_thicknesses, [1.0, 2.0, 1.5, 1.525])


def test_standardize_log_shift_identity(rng):
    s, _, g = _two_layer_set()
    c = 0.37
    shifted = SpectrumSet(g, s.reference, tuple(Sample(x.spectrum * np.exp(c), x.thickness, x.label) for x in s.samples))
    a, b = standardize(s), standardize(shifted)
    l_cm = a.half_thicknesses / 10.0
    np.testing.assert_allclose(b.X, a.X - c / l_cm, rtol=0, atol=1e-12)


def test_affine_fit_exact_on_affine_set(rng):
    P = rng.normal(size=(30, 3))
    W = rng.dirichlet(np.ones(3), size=12).T
    X = P @ W
    fit = affine_fit(X, 3)
    assert np.abs(fit.reconstruct() - X).max() < 1e-10
    assert np.abs(fit.basis.T @ fit.basis - np.eye(2)).max() < 1e-10


def test_affine_fit_q2_direction(rng):
    a, b = rng.normal(size=10), rng.normal(size=10)
    fit = affine_fit(np.column_stack([a, b]), 2)
    d = (b - a) / np.linalg.norm(b - a)
    assert abs(abs(fit.basis[:, 0] @ d) - 1) < 1e-12


def test_affine_fit_error_matches_gram_eigenvalues(rng):
    X = rng.normal(size=(20, 8))
    fit = affine_fit(X, 4)
    err = np.sum((fit.reconstruct() - X) ** 2)
    Xc = X - X.mean(axis=1, keepdims=True)
    ev = np.sort(np.linalg.eigvalsh(Xc.T @ Xc))[::-1]
    assert err == pytest.approx(ev[3:].sum(), rel=1e-9, abs=1e-9)


def test_affine_fit_needs_samples(rng):
    with pytest.raises(ValueError):
        affine_fit(rng.normal(size=(10, 3)), 4)


def test_alpha_max():
    assert alpha_max(1.0, 3.0) == 0.0
    assert alpha_max(np.exp(2.0), 2.0) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        alpha_max(0.5, 1.0)


def test_alpha_max_marks_unreliable_bands():
    from thzunmix.synth import LineSpec, MaterialSpec, NoiseSpec, add_awgn, transmit_trace

    g = default_grid()
    strong = MaterialSpec("strong", (LineSpec(0.9, 0.15, 120.0),), baseline=1.0, slope=0.0)
    pulse = reference_pulse(T_STEP, N)
    d = 3.05
    noise = NoiseSpec(0.1)
    sd = noise.sd_percent / 100 * np.ptp(pulse.samples)
    X = fft_spectrum(pulse, g)
    # white noise of sd s has DFT magnitude ~ s * sqrt(n) per bin
    amax = alpha_max(np.maximum(np.abs(X) / (sd * np.sqrt(N)), 1.0), d)
    truth = make_signature(strong, g)
    errs = []
    for seed in range(5):
        y = add_awgn(transmit_trace([strong], [d], pulse, g.f_start), noise, seed)
        H = transfer_magnitude(fft_spectrum(y, g), X)
        errs.append(np.abs(np.nan_to_num(absorption_spectrum(np.maximum(H, 1e-300), d)) - truth))
    err = np.median(errs, axis=0)
    above, below = truth > amax, truth < 0.5 * amax
    assert above.any() and below.any()
    assert np.median(err[above]) > np.median(err[below])
