from dataclasses import replace

import numpy as np
import pytest

from conftest import dataset
from thzunmix.core import TimeTrace, default_grid
from thzunmix.preprocess import absorption_spectrum, fft_spectrum, standardize, transfer_magnitude
from thzunmix.synth import (
    WATER_LINES_THZ,
    DesignRow,
    LineSpec,
    MaterialSpec,
    NoiseSpec,
    ScenarioError,
    add_awgn,
    build_dataset,
    builtin_scenario,
    forward_mix,
    transmit_trace,
    load_scenario,
    make_signature,
    material_library,
    parse_scenario,
    read_scenario,
    reference_pulse,
    water_vapor_overlay,
)

G = default_grid()


def test_make_signature_examples():
    flat = MaterialSpec("flat", (), baseline=5.0, slope=0.0)
    np.testing.assert_array_equal(make_signature(flat, G), 5.0)
    m = MaterialSpec("one", (LineSpec(1.0, 0.03, 7.0),), baseline=0.5, slope=2.0)
    i = int(np.argmin(np.abs(G.frequencies - 1.0)))
    assert make_signature(m, G)[i] == pytest.approx(0.5 + 2.0 * (1.0 - 0.2) + 7.0, abs=1e-12)
    tyr = make_signature(material_library()["tyrosine"], G)
    assert G.frequencies[np.argmax(tyr)] == pytest.approx(0.95)


def test_line_and_noise_validation():
    with pytest.raises(ValueError):
        LineSpec(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        LineSpec(1.0, 0.1, -1.0)
    with pytest.raises(ValueError):
        NoiseSpec(-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(0.1, 0)
    with pytest.raises(ValueError, match="outside"):
        make_signature(MaterialSpec("x", (LineSpec(2.5, 0.1, 1.0),)), G)


def test_reference_pulse_spectrum():
    sigma, dt, n = 0.15, 0.05, 2048
    p = reference_pulse(dt, n, sigma)
    f = np.fft.rfftfreq(n, dt)
    mag = np.abs(np.fft.rfft(p.samples))
    # continuous-time transform of t exp(-t^2 / 2 s^2) has magnitude ~ f exp(-2 pi^2 s^2 f^2)
    analytic = f * np.exp(-2 * np.pi ** 2 * sigma ** 2 * f ** 2)
    band = (f > 0.05) & (f < 3.0)
    ratio = mag[band] / analytic[band]
    assert np.ptp(ratio) < 1e-6 * ratio.mean()
    i175 = int(np.argmin(np.abs(f - 1.75)))
    assert analytic[i175] / analytic.max() > 1e-3
    assert mag[i175] / mag.max() > 1e-3
    assert abs(p.samples.sum()) <= 1e-9 * np.abs(p.samples).sum()


def test_pulse_grid_relation():
    a = reference_pulse(0.05, 1024)
    b = reference_pulse(0.05, 2048)
    assert 1 / (b.n * b.t_step) == pytest.approx(0.5 / (a.n * a.t_step))
    with pytest.raises(ValueError):
        reference_pulse(0.05, 32)
    with pytest.raises(ValueError, match="Nyquist"):
        reference_pulse(0.5, 256)


def test_forward_mix_examples():
    lib = material_library()
    pulse = reference_pulse(0.05, 2000)
    X = fft_spectrum(pulse, G)
    mats = [lib["glucose"], lib["lactose"]]
    np.testing.assert_array_equal(forward_mix(mats, [0.0, 0.0], pulse, G), X)
    Y = forward_mix([lib["lactose"]], [2.2], pulse, G)
    alpha = absorption_spectrum(transfer_magnitude(Y, X), 2.2)
    assert np.abs(alpha - make_signature(lib["lactose"], G)).max() < 1e-9
    pure = [forward_mix([m], [3.0], pulse, G) for m in mats]
    mix = forward_mix(mats, [1.5, 1.5], pulse, G)
    from thzunmix.core import Sample, SpectrumSet

    Z = standardize(SpectrumSet(G, X, (Sample(pure[0], 3.0, "a"), Sample(pure[1], 3.0, "b"), Sample(mix, 3.0, "m")))).X
    np.testing.assert_allclose(Z[:, 2], 0.5 * (Z[:, 0] + Z[:, 1]), atol=1e-9)
    with pytest.raises(ValueError):
        forward_mix(mats, [1.0, -1.0], pulse, G)


def test_interface_loss_bias():
    # a constant amplitude loss t shifts the recovered absorption by -2 ln(t)/d
    lib = material_library()
    pulse = reference_pulse(0.05, 2000)
    X = fft_spectrum(pulse, G)
    d, t = 2.5, 0.8
    clean = absorption_spectrum(transfer_magnitude(forward_mix([lib["tyrosine"]], [d], pulse, G), X), d)
    lossy = absorption_spectrum(
        transfer_magnitude(forward_mix([lib["tyrosine"]], [d], pulse, G, interface_loss=t), X), d)
    np.testing.assert_allclose(lossy - clean, -2 * np.log(t) / (d / 10), rtol=1e-10)
    tr = transmit_trace([lib["tyrosine"]], [d], pulse, G.f_start, interface_loss=t)
    base = transmit_trace([lib["tyrosine"]], [d], pulse, G.f_start)
    np.testing.assert_allclose(tr.samples, t * base.samples, atol=1e-14)
    for bad in (0.0, 1.2):
        with pytest.raises(ValueError):
            forward_mix([lib["tyrosine"]], [d], pulse, G, interface_loss=bad)


def test_awgn_examples():
    tr = reference_pulse()
    assert add_awgn(tr, NoiseSpec(0.0), 1) is tr
    assert NoiseSpec(0.48, 1000).effective_percent == pytest.approx(0.0152, abs=5e-5)
    big = TimeTrace(0.05, np.r_[1.0, np.zeros(99_999)])
    noisy = add_awgn(big, NoiseSpec(1.0), 3)
    emp = np.std(noisy.samples - big.samples)
    assert emp == pytest.approx(0.01, rel=0.02)
    a = add_awgn(tr, NoiseSpec(0.1), [4, 2])
    b = add_awgn(tr, NoiseSpec(0.1), [4, 2])
    np.testing.assert_array_equal(a.samples, b.samples)


def test_spectral_noise_scales_with_averaging():
    pulse = reference_pulse(0.05, 2000)
    X0 = fft_spectrum(pulse, G)

    def spread(n_avg):
        d = [fft_spectrum(add_awgn(pulse, NoiseSpec(0.5, n_avg), s), G) - X0 for s in range(20)]
        d = np.concatenate(d)
        return np.sqrt(np.mean(np.abs(d) ** 2))

    s1, s100, s1000 = spread(1), spread(100), spread(1000)
    assert s1 / s100 == pytest.approx(10.0, rel=0.05)
    assert s1 / s1000 == pytest.approx(np.sqrt(1000), rel=0.05)


def test_design_shapes():
    assert len(builtin_scenario("ternary").samples) == 9
    assert len(builtin_scenario("quinary55").samples) == 10
    assert len(builtin_scenario("ternary_test").samples) == 15
    assert all(max(r.weights) == 0.5 for r in builtin_scenario("quinary55").samples)
    with pytest.raises(ValueError, match="simplex"):
        DesignRow("bad", (0.6, 0.6), 3.05)


def test_end_to_end_pure_recovery():
    ds = dataset("ternary")
    X = standardize(ds.spectra)
    for i, lb in enumerate(ds.signatures.labels):
        j = ds.abundances.samples.index(lb)
        assert np.abs(X.X[:, j] - ds.signatures.S[:, i]).max() < 1e-8


def test_linearity_of_standardized_mixtures():
    ds = dataset("ternary_test")
    X = standardize(ds.spectra).X
    np.testing.assert_allclose(X, ds.signatures.S @ ds.abundances.T, atol=1e-9)


def test_dataset_determinism():
    sc = builtin_scenario("ternary")
    a = build_dataset(sc, NoiseSpec(0.1), 7)
    b = build_dataset(sc, NoiseSpec(0.1), 7)
    c = build_dataset(sc, NoiseSpec(0.1), 8)
    assert a.spectra == b.spectra
    assert not (a.spectra == c.spectra)


def test_water_vapor():
    Y = np.ones(G.k, dtype=complex)
    np.testing.assert_array_equal(water_vapor_overlay(Y, G, 0.0), Y)
    W = np.abs(water_vapor_overlay(Y, G, 3.0))
    f = G.frequencies
    minima = [f[i] for i in range(1, G.k - 1) if W[i] < W[i - 1] and W[i] < W[i + 1]]
    np.testing.assert_allclose(minima, WATER_LINES_THZ, atol=1e-9)
    plain = dataset("ternary")
    wet = build_dataset(replace(builtin_scenario("ternary"), water_vapor=2.0))
    np.testing.assert_allclose(standardize(wet.spectra).X, standardize(plain.spectra).X, atol=1e-9)


SCENARIO = """\
name = tiny
band = 0.2:1.75
seed = 3
noise.sd_percent = 0.015
material = a baseline=1 slope=0.5 line=0.8:0.05:4
material = b baseline=2 line=1.2:0.04:6
sample = pa d=3.05 a=1
sample = mix d=3.05 a=0.5 b=0.5
"""


def test_scenario_roundtrip(tmp_path):
    sc = parse_scenario(SCENARIO)
    assert sc.q == 2 and len(sc.samples) == 2 and sc.noise.sd_percent == 0.015
    again = parse_scenario(sc.to_text())
    assert again == sc and again.hash() == sc.hash()
    path = tmp_path / "s.txt"
    path.write_text(SCENARIO)
    assert load_scenario(str(path)) == sc


@pytest.mark.parametrize("patch,line,msg", [
    (("seed = 3", "seed = three"), 3, "cannot parse"),
    (("sample = mix d=3.05 a=0.5 b=0.5", "sample = mix d=3.05 a=0.6 b=0.6"), 8, "simplex"),
    (("material = b baseline=2 line=1.2:0.04:6", "material = b baseline=2 line=1.2:0.04"), 6, "center:half_width:peak"),
    (("band = 0.2:1.75", "colour = red"), 2, "unknown key"),
])
def test_scenario_errors_carry_line_numbers(tmp_path, patch, line, msg):
    path = tmp_path / "bad.txt"
    path.write_text(SCENARIO.replace(*patch))
    with pytest.raises(ScenarioError, match=msg) as exc:
        read_scenario(path)
    assert exc.value.line == line
    assert str(path) in str(exc.value)


def test_missing_scenario_names_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.txt"):
        load_scenario(str(tmp_path / "nope.txt"))
