import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thzunmix.core import (
    AbundanceMatrix,
    DatasetFormatError,
    FrequencyGrid,
    Sample,
    SignatureSet,
    SpectrumSet,
    default_grid,
    format_dataset,
    parse_dataset,
    read_abundances,
    read_dataset,
    read_signatures,
    restrict_band,
    write_abundances,
    write_dataset,
    write_signatures,
)


def _set(rng, k=4, n=2, grid=None):
    grid = grid or FrequencyGrid(0.2, 0.01, k)
    ref = rng.normal(size=grid.k) + 1j * rng.normal(size=grid.k) + 3.0
    samples = tuple(Sample(rng.normal(size=grid.k) + 1j * rng.normal(size=grid.k), 3.05, f"t{i}") for i in range(n))
    return SpectrumSet(grid, ref, samples)


def test_grid_invariants():
    with pytest.raises(ValueError):
        FrequencyGrid(0.2, 0.0, 5)
    with pytest.raises(ValueError):
        FrequencyGrid(0.2, 0.01, 1)
    g = default_grid()
    assert g.k == 156
    assert g.f_stop == pytest.approx(1.75)
    assert np.all(np.diff(g.frequencies) > 0)


def test_read_two_samples(tmp_path, rng):
    s = _set(rng, k=4, n=2)
    write_dataset(s, tmp_path / "d.dat")
    back = read_dataset(tmp_path / "d.dat")
    assert len(back.samples) == 2 and back.grid.k == 4
    assert back == s


def test_short_sample_row_reports_band_count(rng):
    text = format_dataset(_set(rng, k=4, n=1)).splitlines()
    text[2] = " ".join(text[2].split()[:-1])
    with pytest.raises(DatasetFormatError, match="inconsistent band count") as exc:
        parse_dataset("\n".join(text))
    assert exc.value.line == 3


def test_thickness_parsed_exactly(rng):
    s = parse_dataset(format_dataset(_set(rng, n=1)))
    assert s.samples[0].thickness == 3.05


@pytest.mark.parametrize("bad,what", [
    ("#grid 0.2 0.01", "malformed header"),
    ("#grid 0.2 -0.01 4", "malformed header"),
])
def test_malformed_header(bad, what):
    with pytest.raises(DatasetFormatError, match=what):
        parse_dataset(bad + "\n#reference 1:0 1:0 1:0 1:0\n")


def test_nonpositive_thickness_located(rng):
    lines = format_dataset(_set(rng, n=1)).splitlines()
    tok = lines[2].split()
    tok[2] = "-1"
    lines[2] = " ".join(tok)
    with pytest.raises(DatasetFormatError, match="nonpositive thickness") as exc:
        parse_dataset("\n".join(lines))
    assert (exc.value.line, exc.value.column) == (3, 3)


def test_empty_sample_list_roundtrip(rng):
    s = _set(rng, n=0)
    text = format_dataset(s)
    assert len(text.splitlines()) == 2
    assert parse_dataset(text) == s


def test_full_band_has_156_columns(rng, tmp_path):
    s = _set(rng, grid=default_grid(), n=1)
    write_dataset(s, tmp_path / "x.dat")
    first = (tmp_path / "x.dat").read_text().splitlines()[1].split()
    assert len(first) - 1 == 156


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 8), n=st.integers(0, 3), data=st.data())
def test_roundtrip_is_exact(k, n, data):
    vals = data.draw(st.lists(finite, min_size=2 * k * (n + 1), max_size=2 * k * (n + 1)))
    v = np.array(vals).reshape(n + 1, 2, k)
    ref = v[0, 0] + 1j * v[0, 1]
    ref[ref == 0] = 1.0
    d = data.draw(st.floats(1e-3, 10.0))
    s = SpectrumSet(FrequencyGrid(0.1, 0.013, k), ref,
                    tuple(Sample(v[i + 1, 0] + 1j * v[i + 1, 1], d, f"s{i}") for i in range(n)))
    assert parse_dataset(format_dataset(s)) == s


def test_restrict_band_examples(rng):
    full = _set(rng, grid=FrequencyGrid(0.0, 0.01, 301), n=2)
    assert restrict_band(full, 0.0, 3.0) == full
    cut = restrict_band(full, 0.2, 1.75)
    assert cut.grid.k == 156 and cut.grid.f_start == pytest.approx(0.2)
    np.testing.assert_array_equal(cut.reference, full.reference[20:176])
    assert restrict_band(cut, 0.2, 1.75) == cut
    with pytest.raises(ValueError, match="does not intersect"):
        restrict_band(full, 5.0, 6.0)


def test_abundance_tolerances():
    A = AbundanceMatrix([[1 - 5e-13, 0.5], [-5e-13 + 5e-13, 0.5]])
    assert np.all(A.T >= 0)
    B = AbundanceMatrix([[1.0 + 5e-13, 0.5], [-5e-13, 0.5]])
    assert B.T[1, 0] == 0.0
    with pytest.raises(ValueError, match="negative"):
        AbundanceMatrix([[1.1, 0.5], [-0.1, 0.5]])
    with pytest.raises(ValueError, match="sums to"):
        AbundanceMatrix([[0.5, 0.5], [0.5 + 2e-9, 0.5]])


def test_csv_roundtrips(tmp_path, rng):
    g = FrequencyGrid(0.2, 0.01, 6)
    sig = SignatureSet(g, rng.uniform(size=(6, 3)), ("a", "b", "c"))
    write_signatures(sig, tmp_path / "s.csv")
    back = read_signatures(tmp_path / "s.csv")
    assert back.labels == sig.labels and back.grid.same_as(g)
    np.testing.assert_array_equal(back.S, sig.S)
    T = rng.dirichlet(np.ones(3), size=4).T
    ab = AbundanceMatrix(T, ("a", "b", "c"), ("x", "y", "z", "w"))
    write_abundances(ab, tmp_path / "a.csv")
    ab2 = read_abundances(tmp_path / "a.csv")
    np.testing.assert_array_equal(ab2.T, ab.T)
    assert ab2.samples == ab.samples
