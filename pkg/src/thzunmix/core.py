"""Domain types, unit constants and text I/O shared by the whole toolkit.

Units used everywhere: frequency in THz, time in ps, thickness in mm and
absorption coefficients in cm^-1.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MM_PER_CM = 10.0
#: speed of light in mm/ps
SPEED_OF_LIGHT_MM_PER_PS = 0.299792458
DEFAULT_BAND = (0.2, 1.75)

ABUNDANCE_SUM_TOL = 1e-9
ABUNDANCE_NEG_TOL = 1e-12


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files; carries the 1-based line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


def mm_to_cm(d_mm):
    return np.asarray(d_mm, dtype=float) / MM_PER_CM


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid ``f_start + i * f_step`` for ``i < k`` (THz)."""

    f_start: float
    f_step: float
    k: int

    def __post_init__(self):
        if not np.isfinite(self.f_start) or not np.isfinite(self.f_step):
            raise ValueError("grid parameters must be finite")
        if self.f_step <= 0:
            raise ValueError(f"f_step must be positive, got {self.f_step}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"grid needs k >= 2 bands, got {self.k}")
        object.__setattr__(self, "f_start", float(self.f_start))
        object.__setattr__(self, "f_step", float(self.f_step))
        object.__setattr__(self, "k", int(self.k))

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.f_step * np.arange(self.k)

    @property
    def f_stop(self) -> float:
        return self.f_start + self.f_step * (self.k - 1)

    def band_indices(self, lo: float, hi: float) -> np.ndarray:
        """Indices of bands with ``lo <= f <= hi`` (tolerant to rounding)."""
        eps = 1e-9 * self.f_step
        f = self.frequencies
        return np.flatnonzero((f >= lo - eps) & (f <= hi + eps))

    def subgrid(self, indices: np.ndarray) -> "FrequencyGrid":
        indices = np.asarray(indices)
        if indices.size < 2 or np.any(np.diff(indices) != 1):
            raise ValueError("subgrid needs a contiguous run of at least 2 bands")
        return FrequencyGrid(self.f_start + self.f_step * int(indices[0]), self.f_step, indices.size)

    def same_as(self, other: "FrequencyGrid", rtol: float = 1e-9) -> bool:
        return (
            self.k == other.k
            and abs(self.f_step - other.f_step) <= rtol * self.f_step
            and abs(self.f_start - other.f_start) <= rtol * max(self.f_step, abs(self.f_start))
        )


def default_grid() -> FrequencyGrid:
    """0.2-1.75 THz at 0.01 THz resolution (156 bands)."""
    return FrequencyGrid(0.2, 0.01, 156)


@dataclass(frozen=True)
class TimeTrace:
    t_step: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        if self.t_step <= 0:
            raise ValueError("t_step must be positive")
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("a time trace needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("time trace contains non-finite values")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "t_step", float(self.t_step))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t_step * np.arange(self.n)


def _frozen_complex(values, k: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.shape != (k,):
        raise ValueError(f"{what}: expected {k} bands, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite spectrum value")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sample:
    spectrum: np.ndarray
    thickness: float
    label: str


@dataclass(frozen=True)
class SpectrumSet:
    """Reference spectrum plus per-sample transmitted spectra on one grid."""

    grid: FrequencyGrid
    reference: np.ndarray
    samples: tuple[Sample, ...] = ()

    def __post_init__(self):
        k = self.grid.k
        ref = _frozen_complex(self.reference, k, "reference")
        if np.any(np.abs(ref) == 0):
            raise ValueError("reference magnitude must be nonzero at every band")
        object.__setattr__(self, "reference", ref)
        checked = []
        for s in self.samples:
            if not isinstance(s, Sample):
                s = Sample(*s)
            if not (s.thickness > 0 and np.isfinite(s.thickness)):
                raise ValueError(f"sample {s.label!r}: thickness must be positive, got {s.thickness}")
            _check_label(s.label)
            checked.append(Sample(_frozen_complex(s.spectrum, k, f"sample {s.label!r}"), float(s.thickness), s.label))
        object.__setattr__(self, "samples", tuple(checked))

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.samples]

    @property
    def thicknesses(self) -> np.ndarray:
        return np.array([s.thickness for s in self.samples])

    def spectra(self) -> np.ndarray:
        """k x l complex matrix of sample spectra."""
        if not self.samples:
            return np.zeros((self.grid.k, 0), dtype=complex)
        return np.column_stack([s.spectrum for s in self.samples])

    def select(self, labels: Sequence[str]) -> "SpectrumSet":
        by_label = {s.label: s for s in self.samples}
        return SpectrumSet(self.grid, self.reference, tuple(by_label[lb] for lb in labels))

    def __eq__(self, other):
        if not isinstance(other, SpectrumSet):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.reference, other.reference)
            and len(self.samples) == len(other.samples)
            and all(
                a.label == b.label and a.thickness == b.thickness and np.array_equal(a.spectrum, b.spectrum)
                for a, b in zip(self.samples, other.samples)
            )
        )

    __hash__ = None


def _check_label(label: str):
    if not label or any(ch.isspace() for ch in label) or "," in label:
        raise ValueError(f"labels must be non-empty without whitespace or commas: {label!r}")


@dataclass(frozen=True)
class StandardizedData:
    """Thickness-normalized log-magnitude spectra; columns are samples (cm^-1)."""

    grid: FrequencyGrid
    X: np.ndarray
    half_thicknesses: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] != self.grid.k:
            raise ValueError(f"X must be {self.grid.k} x l, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("standardized data must be finite")
        half = np.array(self.half_thicknesses, dtype=float).reshape(-1)
        if half.size != X.shape[1]:
            raise ValueError("one half-thickness per column required")
        labels = tuple(self.labels) or tuple(f"s{i}" for i in range(X.shape[1]))
        if len(labels) != X.shape[1]:
            raise ValueError("one label per column required")
        X.setflags(write=False)
        half.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "half_thicknesses", half)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.X.shape[1]

    def columns(self, idx) -> "StandardizedData":
        idx = np.asarray(idx)
        return StandardizedData(self.grid, self.X[:, idx], self.half_thicknesses[idx], tuple(self.labels[i] for i in idx))


@dataclass(frozen=True)
class SignatureSet:
    """k x q matrix of absorption signatures (cm^-1), one column per material."""

    grid: FrequencyGrid
    S: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != self.grid.k:
            raise ValueError(f"S must be {self.grid.k} x q, got {S.shape}")
        if S.shape[1] < 2:
            raise ValueError("a signature set needs q >= 2 materials")
        if not np.all(np.isfinite(S)):
            raise ValueError("signatures must be finite")
        labels = tuple(self.labels) or tuple(f"m{i + 1}" for i in range(S.shape[1]))
        if len(labels) != S.shape[1]:
            raise ValueError("one label per signature required")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "labels", labels)

    @property
    def q(self) -> int:
        return self.S.shape[1]


@dataclass(frozen=True)
class AbundanceMatrix:
    """Nonnegative, column-stochastic q x l matrix of mixing proportions.

    Entries in (-1e-12, 0) are clamped to zero; anything more negative, or a
    column sum off by more than 1e-9, is rejected.
    """

    T: np.ndarray
    materials: tuple[str, ...] = field(default=())
    samples: tuple[str, ...] = field(default=())

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        if T.ndim != 2:
            raise ValueError("abundances must be a 2-D array")
        if not np.all(np.isfinite(T)):
            raise ValueError("abundances must be finite")
        if np.any(T < -ABUNDANCE_NEG_TOL):
            i, j = np.unravel_index(np.argmin(T), T.shape)
            raise ValueError(f"negative abundance {T[i, j]:.3g} at ({i}, {j})")
        T[T < 0] = 0.0
        dev = np.abs(T.sum(axis=0) - 1.0)
        if np.any(dev > ABUNDANCE_SUM_TOL):
            j = int(np.argmax(dev))
            raise ValueError(f"abundance column {j} sums to {T[:, j].sum():.12g}, not 1")
        materials = tuple(self.materials) or tuple(f"m{i + 1}" for i in range(T.shape[0]))
        samples = tuple(self.samples) or tuple(f"s{j}" for j in range(T.shape[1]))
        if len(materials) != T.shape[0] or len(samples) != T.shape[1]:
            raise ValueError("label counts do not match abundance shape")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "materials", materials)
        object.__setattr__(self, "samples", samples)


# ---------------------------------------------------------------------------
# dataset text format

def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_complex(z: complex) -> str:
    return f"{_fmt(z.real)}:{_fmt(z.imag)}"


def _parse_float(token: str, line: int, col: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(f"cannot parse {what} {token!r}", line, col) from None
    if not np.isfinite(value):
        raise DatasetFormatError(f"non-finite {what} {token!r}", line, col)
    return value


def _parse_pairs(tokens: list[str], k: int, line: int, first_col: int) -> np.ndarray:
    if len(tokens) != k:
        raise DatasetFormatError(f"inconsistent band count: expected {k} values, found {len(tokens)}", line)
    out = np.empty(k, dtype=complex)
    for j, tok in enumerate(tokens):
        col = first_col + j
        re_s, sep, im_s = tok.partition(":")
        if not sep:
            raise DatasetFormatError(f"expected re:im pair, found {tok!r}", line, col)
        out[j] = complex(_parse_float(re_s, line, col, "real part"), _parse_float(im_s, line, col, "imaginary part"))
    return out


def atomic_write_text(path: str | os.PathLike, text: str):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_dataset(spectra: SpectrumSet) -> str:
    g = spectra.grid
    lines = [f"#grid {_fmt(g.f_start)} {_fmt(g.f_step)} {g.k}"]
    lines.append(" ".join(["#reference"] + [_fmt_complex(z) for z in spectra.reference]))
    for s in spectra.samples:
        lines.append(" ".join([f"#sample {s.label} {_fmt(s.thickness)}"] + [_fmt_complex(z) for z in s.spectrum]))
    return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> SpectrumSet:
    rows = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not rows:
        raise DatasetFormatError("empty dataset file", 1)
    lineno, head = rows[0]
    if head[0] != "#grid" or len(head) != 4:
        raise DatasetFormatError("malformed header: expected '#grid f_start f_step k'", lineno, 1)
    f_start = _parse_float(head[1], lineno, 2, "f_start")
    f_step = _parse_float(head[2], lineno, 3, "f_step")
    try:
        k = int(head[3])
    except ValueError:
        raise DatasetFormatError(f"cannot parse band count {head[3]!r}", lineno, 4) from None
    try:
        grid = FrequencyGrid(f_start, f_step, k)
    except ValueError as exc:
        raise DatasetFormatError(f"malformed header: {exc}", lineno) from None
    if len(rows) < 2 or rows[1][1][0] != "#reference":
        raise DatasetFormatError("expected '#reference' line", rows[1][0] if len(rows) > 1 else lineno + 1, 1)
    lineno, ref_tokens = rows[1]
    reference = _parse_pairs(ref_tokens[1:], k, lineno, 2)
    if np.any(reference == 0):
        raise DatasetFormatError("reference magnitude is zero at some band", lineno)
    samples = []
    for lineno, tokens in rows[2:]:
        if tokens[0] != "#sample" or len(tokens) < 3:
            raise DatasetFormatError("expected '#sample <label> <thickness_mm>' line", lineno, 1)
        label = tokens[1]
        d = _parse_float(tokens[2], lineno, 3, "thickness")
        if d <= 0:
            raise DatasetFormatError(f"nonpositive thickness {tokens[2]}", lineno, 3)
        samples.append(Sample(_parse_pairs(tokens[3:], k, lineno, 4), d, label))
    try:
        return SpectrumSet(grid, reference, tuple(samples))
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from None


def read_dataset(path: str | os.PathLike) -> SpectrumSet:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return parse_dataset(path.read_text(encoding="utf-8"))


def write_dataset(spectra: SpectrumSet, path: str | os.PathLike):
    atomic_write_text(path, format_dataset(spectra))


def restrict_band(spectra: SpectrumSet, lo: float, hi: float) -> SpectrumSet:
    """Keep only the bands with ``lo <= f <= hi``."""
    if not lo < hi:
        raise ValueError(f"empty band: lo={lo} >= hi={hi}")
    idx = spectra.grid.band_indices(lo, hi)
    if idx.size == 0:
        raise ValueError(f"band [{lo}, {hi}] THz does not intersect grid "
                         f"[{spectra.grid.f_start}, {spectra.grid.f_stop}] THz")
    if idx.size == spectra.grid.k:
        return spectra
    grid = spectra.grid.subgrid(idx)
    return SpectrumSet(
        grid,
        spectra.reference[idx],
        tuple(Sample(s.spectrum[idx], s.thickness, s.label) for s in spectra.samples),
    )


# ---------------------------------------------------------------------------
# CSV matrices
#
# Spectra-like matrices (signatures, absorption spectra) are stored one row per
# spectrum with a header of band frequencies; abundances one row per material
# with a header of sample labels.

def spectra_to_csv(labels: Sequence[str], grid: FrequencyGrid, M: np.ndarray) -> str:
    """``M`` is k x n; written as n rows under a frequency header."""
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [_fmt(f) for f in grid.frequencies])
    for j, lb in enumerate(labels):
        w.writerow([lb] + [_fmt(v) for v in M[:, j]])
    return buf.getvalue()


def spectra_from_csv(text: str) -> tuple[list[str], FrequencyGrid, np.ndarray]:
    rows = list(csv.reader(text.splitlines()))
    if not rows or rows[0][0] != "label" or len(rows[0]) < 3:
        raise DatasetFormatError("spectra CSV needs a 'label,f1,f2,...' header", 1)
    freqs = np.array([_parse_float(t, 1, j + 2, "frequency") for j, t in enumerate(rows[0][1:])])
    steps = np.diff(freqs)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise DatasetFormatError("header frequencies must form a uniform increasing grid", 1)
    grid = FrequencyGrid(freqs[0], float(steps.mean()), freqs.size)
    labels, cols = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != freqs.size + 1:
            raise DatasetFormatError(f"inconsistent band count: expected {freqs.size} values, found {len(row) - 1}", i)
        labels.append(row[0])
        cols.append([_parse_float(t, i, j + 2, "value") for j, t in enumerate(row[1:])])
    M = np.array(cols, dtype=float).T if cols else np.zeros((freqs.size, 0))
    return labels, grid, M


def write_signatures(sig: SignatureSet, path):
    atomic_write_text(path, spectra_to_csv(sig.labels, sig.grid, sig.S))


def read_signatures(path) -> SignatureSet:
    labels, grid, S = spectra_from_csv(Path(path).read_text(encoding="utf-8"))
    return SignatureSet(grid, S, tuple(labels))


def abundances_to_csv(ab: AbundanceMatrix) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["material"] + list(ab.samples))
    for i, m in enumerate(ab.materials):
        w.writerow([m] + [_fmt(v) for v in ab.T[i]])
    return buf.getvalue()


def write_abundances(ab: AbundanceMatrix, path):
    atomic_write_text(path, abundances_to_csv(ab))


def read_abundances(path) -> AbundanceMatrix:
    rows = [r for r in csv.reader(Path(path).read_text(encoding="utf-8").splitlines()) if r]
    if not rows or rows[0][0] != "material":
        raise DatasetFormatError("abundance CSV needs a 'material,<samples>' header", 1)
    samples = tuple(rows[0][1:])
    materials, vals = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(samples) + 1:
            raise DatasetFormatError("inconsistent sample count", i)
        materials.append(row[0])
        vals.append([_parse_float(t, i, j + 2, "abundance") for j, t in enumerate(row[1:])])
    return AbundanceMatrix(np.array(vals), tuple(materials), samples)
