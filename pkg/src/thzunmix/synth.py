"""Synthetic THz transmission data with known ground truth.

Materials are parametric absorption spectra (linear baseline plus Lorentzian
lines).  A sample of thickness ``d_total`` containing weights ``w`` is
modelled as stacked layers ``d_i = w_i * d_total``; the probe pulse is
attenuated by ``exp(-alpha_i d_i / 2)`` per layer, noise is added to the time
trace, and the spectrum is read off the DFT bins of the analysis grid.

Scenarios (material library, mixing design, noise, seed) can be built in code
or read from a small ``key = value`` text format, see :func:`parse_scenario`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    AbundanceMatrix,
    FrequencyGrid,
    Sample,
    SignatureSet,
    SPEED_OF_LIGHT_MM_PER_PS,
    SpectrumSet,
    TimeTrace,
    mm_to_cm,
)
from .preprocess import dft_bin_indices

__all__ = [
    "LineSpec",
    "MaterialSpec",
    "NoiseSpec",
    "DesignRow",
    "Scenario",
    "SyntheticDataset",
    "ScenarioError",
    "WATER_LINES_THZ",
    "make_signature",
    "reference_pulse",
    "forward_mix",
    "add_awgn",
    "water_vapor_overlay",
    "build_dataset",
    "material_library",
    "ternary_design",
    "pairwise_design",
    "barycentric_design",
    "builtin_scenario",
    "BUILTIN_SCENARIOS",
    "parse_scenario",
    "read_scenario",
    "load_scenario",
]

WATER_LINES_THZ = (0.56, 0.75, 0.99, 1.10, 1.16, 1.21, 1.23, 1.41, 1.60, 1.66, 1.72)
WATER_HALF_WIDTH = 0.004  # THz

DEFAULT_T_STEP = 0.05  # ps
DEFAULT_N = 2048
DATASET_N = 2000  # 0.05 ps x 2000 puts DFT bins exactly on a 0.01 THz grid
PULSE_SIGMA = 0.15  # ps


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class LineSpec:
    center: float
    half_width: float
    peak: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"line half width must be positive, got {self.half_width}")
        if self.peak < 0:
            raise ValueError(f"line peak must be nonnegative, got {self.peak}")


@dataclass(frozen=True)
class MaterialSpec:
    label: str
    lines: tuple[LineSpec, ...] = ()
    baseline: float = 0.0
    slope: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))

    def absorption(self, f: np.ndarray, f_ref: float) -> np.ndarray:
        """Absorption (cm^-1) at frequencies ``f``; the slope is taken about ``f_ref``."""
        f = np.asarray(f, dtype=float)
        a = self.baseline + self.slope * (f - f_ref)
        for ln in self.lines:
            hw2 = ln.half_width ** 2
            a = a + ln.peak * hw2 / ((f - ln.center) ** 2 + hw2)
        return np.maximum(a, 0.0)


@dataclass(frozen=True)
class NoiseSpec:
    sd_percent: float = 0.0
    traces_averaged: int = 1

    def __post_init__(self):
        if self.sd_percent < 0:
            raise ValueError("sd_percent must be nonnegative")
        if int(self.traces_averaged) != self.traces_averaged or self.traces_averaged < 1:
            raise ValueError("traces_averaged must be a positive integer")

    @property
    def effective_percent(self) -> float:
        return self.sd_percent / np.sqrt(self.traces_averaged)


def make_signature(spec: MaterialSpec, grid: FrequencyGrid, f_ref: float | None = None) -> np.ndarray:
    """Absorption spectrum of ``spec`` on ``grid`` (slope about ``grid.f_start`` by default)."""
    for ln in spec.lines:
        if not grid.f_start - 1e-9 <= ln.center <= grid.f_stop + 1e-9:
            raise ValueError(f"{spec.label}: line at {ln.center} THz is outside the grid")
    return spec.absorption(grid.frequencies, grid.f_start if f_ref is None else f_ref)


# ---------------------------------------------------------------------------
# probe pulse and propagation

def reference_pulse(
    t_step: float = DEFAULT_T_STEP,
    n: int = DEFAULT_N,
    sigma: float = PULSE_SIGMA,
    band: tuple[float, float] = (0.2, 1.75),
) -> TimeTrace:
    """Derivative-of-Gaussian probe pulse.

    The pulse is centred on a sample an eighth of the way into the window, so
    it is odd about that sample and sums to zero.  Raises ``ValueError`` when
    the DFT magnitude falls below 1e-6 of its peak anywhere in ``band``.
    """
    if n < 64:
        raise ValueError("reference pulse needs n >= 64 samples")
    if t_step <= 0 or sigma <= 0:
        raise ValueError("t_step and sigma must be positive")
    nyquist = 0.5 / t_step
    if band[1] > nyquist:
        raise ValueError(f"t_step {t_step} ps gives Nyquist {nyquist:.4g} THz < {band[1]} THz")
    t = (np.arange(n) - n // 8) * t_step
    x = -t / sigma ** 2 * np.exp(-0.5 * (t / sigma) ** 2)
    x /= np.abs(x).max()
    mag = np.abs(np.fft.rfft(x))
    f = np.fft.rfftfreq(n, t_step)
    inband = (f >= band[0]) & (f <= band[1])
    if not inband.any() or mag[inband].min() <= 1e-6 * mag.max():
        raise ValueError("pulse spectrum does not cover the analysis band")
    return TimeTrace(t_step, x)


def _phase_delay(f, thicknesses, refractive_index):
    d = float(np.sum(thicknesses))
    delay = (refractive_index - 1.0) * d / SPEED_OF_LIGHT_MM_PER_PS  # ps
    return np.exp(-2j * np.pi * f * delay)


def _log_transfer(materials, thicknesses, f, f_ref):
    acc = np.zeros_like(np.asarray(f, dtype=float))
    for m, d in zip(materials, thicknesses):
        if d:
            acc = acc + m.absorption(f, f_ref) * mm_to_cm(d)
    return -0.5 * acc


def _check_layers(materials, thicknesses):
    thicknesses = np.asarray(thicknesses, dtype=float)
    if len(materials) != thicknesses.size:
        raise ValueError("one thickness per material required")
    if np.any(thicknesses < 0):
        raise ValueError("thicknesses must be nonnegative")
    return thicknesses


def _check_loss(t):
    if not 0.0 < t <= 1.0:
        raise ValueError(f"interface_loss must lie in (0, 1], got {t}")


def forward_mix(
    materials: Sequence[MaterialSpec],
    thicknesses: Sequence[float],
    pulse: TimeTrace,
    grid: FrequencyGrid,
    f_ref: float | None = None,
    phase: bool = False,
    refractive_index: float = 1.5,
    interface_loss: float = 1.0,
) -> np.ndarray:
    """Transmitted spectrum on ``grid`` for stacked layers (thicknesses in mm).

    Pure amplitude model unless ``phase`` is set, in which case the excess
    optical path ``(n - 1) d`` delays the pulse.  ``interface_loss`` is a
    constant amplitude factor in (0, 1] standing in for the surface
    transmission terms that the standardization ignores; values below 1
    bias the recovered absorption upward by ``-2 ln(t) / d``.
    """
    thicknesses = _check_layers(materials, thicknesses)
    _check_loss(interface_loss)
    f_ref = grid.f_start if f_ref is None else f_ref
    idx = dft_bin_indices(pulse.n, pulse.t_step, grid)
    X = np.fft.rfft(pulse.samples)[idx]
    f = grid.frequencies
    Y = interface_loss * X * np.exp(_log_transfer(materials, thicknesses, f, f_ref))
    if phase:
        Y = Y * _phase_delay(f, thicknesses, refractive_index)
    return Y


def transmit_trace(
    materials: Sequence[MaterialSpec],
    thicknesses: Sequence[float],
    pulse: TimeTrace,
    f_ref: float,
    phase: bool = False,
    refractive_index: float = 1.5,
    interface_loss: float = 1.0,
) -> TimeTrace:
    """Time-domain transmitted pulse (the same model applied to every DFT bin)."""
    thicknesses = _check_layers(materials, thicknesses)
    _check_loss(interface_loss)
    f = np.fft.rfftfreq(pulse.n, pulse.t_step)
    H = interface_loss * np.exp(_log_transfer(materials, thicknesses, f, f_ref))
    if phase:
        H = H * _phase_delay(f, thicknesses, refractive_index)
        H[-1] = H[-1].real if pulse.n % 2 == 0 else H[-1]
    y = np.fft.irfft(np.fft.rfft(pulse.samples) * H, pulse.n)
    return TimeTrace(pulse.t_step, y)


def add_awgn(trace: TimeTrace, spec: NoiseSpec, rng_seed) -> TimeTrace:
    """Add white Gaussian noise with sd ``sd_percent`` % of the trace's peak-to-peak / sqrt(N)."""
    if spec.sd_percent == 0:
        return trace
    sd = spec.effective_percent / 100.0 * np.ptp(trace.samples)
    rng = np.random.default_rng(rng_seed)
    return TimeTrace(trace.t_step, trace.samples + sd * rng.standard_normal(trace.n))


def water_vapor_overlay(Y: np.ndarray, grid: FrequencyGrid, strength: float) -> np.ndarray:
    """Attenuate ``|Y|`` by ``exp(-strength * L(f) / 2)`` with ``L`` a comb of narrow water lines."""
    if strength < 0:
        raise ValueError("strength must be nonnegative")
    Y = np.asarray(Y, dtype=complex)
    if strength == 0:
        return Y.copy()
    f = grid.frequencies
    hw2 = WATER_HALF_WIDTH ** 2
    L = sum(hw2 / ((f - c) ** 2 + hw2) for c in WATER_LINES_THZ)
    return Y * np.exp(-0.5 * strength * L)


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class DesignRow:
    label: str
    weights: tuple[float, ...]
    d_total: float

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"sample {self.label!r}: weights {w} are not on the simplex")
        if not self.d_total > 0:
            raise ValueError(f"sample {self.label!r}: total thickness must be positive")


@dataclass(frozen=True)
class Scenario:
    name: str
    materials: tuple[MaterialSpec, ...]
    samples: tuple[DesignRow, ...]
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    band: tuple[float, float] = (0.2, 1.75)
    t_step: float = DEFAULT_T_STEP
    n: int = DATASET_N
    water_vapor: float = 0.0
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        labels = [m.label for m in self.materials]
        if len(set(labels)) != len(labels):
            raise ValueError("material labels must be unique")
        for row in self.samples:
            if len(row.weights) != len(self.materials):
                raise ValueError(f"sample {row.label!r}: {len(row.weights)} weights for {len(labels)} materials")
        if len({r.label for r in self.samples}) != len(self.samples):
            raise ValueError("sample labels must be unique")

    @property
    def q(self) -> int:
        return len(self.materials)

    @property
    def grid(self) -> FrequencyGrid:
        df = 1.0 / (self.n * self.t_step)
        i0 = int(np.ceil(self.band[0] / df - 1e-9))
        i1 = int(np.floor(self.band[1] / df + 1e-9))
        return FrequencyGrid(i0 * df, df, i1 - i0 + 1)

    def with_noise(self, sd_percent: float, traces_averaged: int | None = None) -> "Scenario":
        n_avg = self.noise.traces_averaged if traces_averaged is None else traces_averaged
        return replace(self, noise=NoiseSpec(sd_percent, n_avg))

    def to_text(self) -> str:
        out = [f"name = {self.name}", f"band = {self.band[0]!r}:{self.band[1]!r}",
               f"t_step = {self.t_step!r}", f"n = {self.n}", f"seed = {self.seed}",
               f"noise.sd_percent = {self.noise.sd_percent!r}",
               f"noise.traces_averaged = {self.noise.traces_averaged}",
               f"water_vapor = {self.water_vapor!r}"]
        if self.seeds:
            out.append("seeds = " + ",".join(str(s) for s in self.seeds))
        for m in self.materials:
            toks = [m.label, f"baseline={m.baseline!r}", f"slope={m.slope!r}"]
            toks += [f"line={ln.center!r}:{ln.half_width!r}:{ln.peak!r}" for ln in m.lines]
            out.append("material = " + " ".join(toks))
        for r in self.samples:
            toks = [r.label, f"d={r.d_total!r}"]
            toks += [f"{m.label}={w!r}" for m, w in zip(self.materials, r.weights) if w]
            out.append("sample = " + " ".join(toks))
        return "\n".join(out) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


@dataclass
class SyntheticDataset:
    spectra: SpectrumSet
    signatures: SignatureSet
    abundances: AbundanceMatrix
    scenario: Scenario


def build_dataset(scenario: Scenario, noise: NoiseSpec | None = None, seed: int | None = None) -> SyntheticDataset:
    """Synthesize every design row of ``scenario`` with its ground truth.

    The reference trace and each sample trace get independent noise streams
    derived from ``(seed, index)`` (index 0 is the reference).
    """
    noise = scenario.noise if noise is None else noise
    seed = scenario.seed if seed is None else int(seed)
    grid = scenario.grid
    f_ref = grid.f_start
    pulse = reference_pulse(scenario.t_step, scenario.n, band=scenario.band)
    idx = dft_bin_indices(pulse.n, pulse.t_step, grid)

    def measure(trace: TimeTrace, stream: int) -> np.ndarray:
        trace = add_awgn(trace, noise, [seed, stream])
        Y = np.fft.rfft(trace.samples)[idx]
        return water_vapor_overlay(Y, grid, scenario.water_vapor)

    reference = measure(pulse, 0)
    samples = []
    for j, row in enumerate(scenario.samples):
        d = np.asarray(row.weights) * row.d_total
        y = transmit_trace(scenario.materials, d, pulse, f_ref)
        samples.append(Sample(measure(y, j + 1), row.d_total, row.label))
    spectra = SpectrumSet(grid, reference, tuple(samples))
    S = np.column_stack([make_signature(m, grid, f_ref) for m in scenario.materials])
    mats = tuple(m.label for m in scenario.materials)
    signatures = SignatureSet(grid, S, mats)
    T = np.column_stack([row.weights for row in scenario.samples])
    abundances = AbundanceMatrix(T, mats, tuple(r.label for r in scenario.samples))
    return SyntheticDataset(spectra, signatures, abundances, scenario)


# ---------------------------------------------------------------------------
# built-in library and designs

def material_library() -> dict[str, MaterialSpec]:
    """Stand-in spectra for the five tablet chemicals (peak positions only are realistic)."""
    L = LineSpec
    mats = [
        MaterialSpec("glucose", (L(1.44, 0.05, 6.0), L(1.25, 0.08, 3.0)), baseline=0.5, slope=3.0),
        MaterialSpec("lactose", (L(0.52, 0.02, 6.0), L(1.30, 0.04, 10.0)), baseline=0.3, slope=1.5),
        MaterialSpec("tyrosine", (L(0.95, 0.03, 10.0),), baseline=0.5, slope=1.0),
        MaterialSpec("histidine", (L(0.78, 0.03, 9.0),), baseline=0.4, slope=2.0),
        MaterialSpec("sucrose", (L(1.44, 0.06, 5.0), L(1.62, 0.05, 4.0)), baseline=0.5, slope=4.0),
    ]
    return {m.label: m for m in mats}


def _short(label: str) -> str:
    return label[:3]


def _mix_label(materials, weights) -> str:
    parts = [f"{_short(m.label)}{int(round(10 * w))}" for m, w in zip(materials, weights) if w > 0]
    return "".join(parts)


def ternary_design(materials, d_total: float = 3.05, ratios=(0.3, 0.7)) -> list[DesignRow]:
    """Pure samples plus, for each pair, one tablet per ratio."""
    q = len(materials)
    rows = [DesignRow(m.label, tuple(np.eye(q)[i]), d_total) for i, m in enumerate(materials)]
    for i in range(q):
        for j in range(i + 1, q):
            for r in ratios:
                w = np.zeros(q)
                w[i], w[j] = r, round(1.0 - r, 12)
                rows.append(DesignRow(_mix_label(materials, w), tuple(w), d_total))
    return rows


def pairwise_design(materials, ratio: float = 0.5, d_total: float = 3.05, pures: bool = False) -> list[DesignRow]:
    """Pairwise tablets at ``ratio : 1 - ratio``, optionally with the pures.

    Unless ``ratio`` is 0.5, each pair appears in both orders so that every
    material is the majority component equally often.
    """
    q = len(materials)
    rows = []
    if pures:
        rows = [DesignRow(m.label, tuple(np.eye(q)[i]), d_total) for i, m in enumerate(materials)]
    orders = (ratio,) if ratio == 0.5 else (ratio, 1.0 - ratio)
    for i in range(q):
        for j in range(i + 1, q):
            for r in orders:
                w = np.zeros(q)
                w[i], w[j] = r, round(1.0 - r, 12)
                rows.append(DesignRow(_mix_label(materials, w), tuple(w), d_total))
    return rows


def barycentric_design(materials, steps: int = 4, d_total: float = 3.05) -> list[DesignRow]:
    """All compositions with weights on a 1/steps lattice (15 tablets for q=3, steps=4)."""
    q = len(materials)
    rows = []

    def rec(prefix, left):
        if len(prefix) == q - 1:
            yield prefix + [left]
            return
        for a in range(left, -1, -1):
            yield from rec(prefix + [a], left - a)

    for k, counts in enumerate(rec([], steps)):
        w = np.asarray(counts, dtype=float) / steps
        rows.append(DesignRow(f"tab{k + 1:02d}", tuple(w), d_total))
    return rows


def _lib(*names):
    lib = material_library()
    return tuple(lib[n] for n in names)


TERNARY = ("glucose", "lactose", "tyrosine")
QUINARY = ("glucose", "lactose", "tyrosine", "histidine", "sucrose")


def builtin_scenario(name: str) -> Scenario:
    """Named designs: ``ternary``, ``quinary55``, ``quinary_pures``, ``ternary_test``, ``quinary_purity<w>``."""
    if name == "ternary":
        mats = _lib(*TERNARY)
        return Scenario(name, mats, tuple(ternary_design(mats)))
    if name == "quinary55":
        mats = _lib(*QUINARY)
        return Scenario(name, mats, tuple(pairwise_design(mats, 0.5)))
    if name == "quinary_pures":
        mats = _lib(*QUINARY)
        return Scenario(name, mats, tuple(pairwise_design(mats, 0.5, pures=True)))
    if name == "ternary_test":
        mats = _lib(*TERNARY)
        return Scenario(name, mats, tuple(barycentric_design(mats, 4)))
    if name.startswith("quinary_purity"):
        w = float(name[len("quinary_purity"):])
        mats = _lib(*QUINARY)
        return Scenario(name, mats, tuple(pairwise_design(mats, w)))
    raise KeyError(f"unknown built-in scenario {name!r}; choose from {', '.join(BUILTIN_SCENARIOS)}")


BUILTIN_SCENARIOS = ("ternary", "quinary55", "quinary_pures", "ternary_test")


# ---------------------------------------------------------------------------
# scenario files

class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        self.base_message = message
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


def _num(tok: str, what: str, line: int, kind=float):
    try:
        v = kind(tok)
    except ValueError:
        raise ScenarioError(f"{what}: cannot parse {tok!r} as a number", line) from None
    if kind is float and not np.isfinite(v):
        raise ScenarioError(f"{what}: value must be finite", line)
    return v


def parse_scenario(text: str) -> Scenario:
    """Parse the ``key = value`` scenario format.

    Keys: ``name``, ``band`` (``lo:hi`` THz), ``t_step`` (ps), ``n``, ``seed``,
    ``seeds`` (comma list), ``noise.sd_percent``, ``noise.traces_averaged``,
    ``water_vapor``, and repeatable ``material`` / ``sample`` lines::

        material = lactose baseline=0.3 slope=1.5 line=0.52:0.02:6 line=1.3:0.04:10
        sample = lac5tyr5 d=3.05 lactose=0.5 tyrosine=0.5

    Sample weights not mentioned are zero.  ``#`` starts a comment.
    """
    fields: dict[str, str] = {}
    mats: list[MaterialSpec] = []
    raw_samples: list[tuple[int, str]] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", no)
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "material":
            mats.append(_parse_material(value, no))
        elif key == "sample":
            raw_samples.append((no, value))
        elif key in ("name", "band", "t_step", "n", "seed", "seeds", "noise.sd_percent",
                     "noise.traces_averaged", "water_vapor"):
            if key in fields:
                raise ScenarioError(f"duplicate key {key!r}", no)
            fields[key] = (value, no)
        else:
            raise ScenarioError(f"unknown key {key!r}", no)
    if len(mats) < 2:
        raise ScenarioError("a scenario needs at least two materials")
    names = [m.label for m in mats]
    rows = [_parse_sample(v, no, names) for no, v in raw_samples]
    if not rows:
        raise ScenarioError("a scenario needs at least one sample")

    def get(key, kind, default):
        if key not in fields:
            return default
        v, no = fields[key]
        return _num(v, key, no, kind)

    band = (0.2, 1.75)
    if "band" in fields:
        v, no = fields["band"]
        band = _parse_band(v, no)
    seeds = ()
    if "seeds" in fields:
        v, no = fields["seeds"]
        seeds = tuple(_num(s.strip(), "seeds", no, int) for s in v.split(",") if s.strip())
    try:
        noise = NoiseSpec(get("noise.sd_percent", float, 0.0), get("noise.traces_averaged", int, 1))
        return Scenario(
            name=fields.get("name", ("scenario", 0))[0],
            materials=tuple(mats),
            samples=tuple(rows),
            noise=noise,
            seed=get("seed", int, 0),
            band=band,
            t_step=get("t_step", float, DEFAULT_T_STEP),
            n=get("n", int, DATASET_N),
            water_vapor=get("water_vapor", float, 0.0),
            seeds=seeds,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def _parse_band(v: str, no: int) -> tuple[float, float]:
    parts = v.split(":")
    if len(parts) != 2:
        raise ScenarioError(f"band must be 'lo:hi', got {v!r}", no)
    lo, hi = (_num(p, "band", no) for p in parts)
    if not 0 <= lo < hi:
        raise ScenarioError(f"band needs 0 <= lo < hi, got {v!r}", no)
    return lo, hi


def _parse_material(value: str, no: int) -> MaterialSpec:
    toks = value.split()
    if not toks:
        raise ScenarioError("material line needs a label", no)
    label, baseline, slope, lines = toks[0], 0.0, 0.0, []
    for tok in toks[1:]:
        if "=" not in tok:
            raise ScenarioError(f"material {label}: expected key=value, got {tok!r}", no)
        k, v = tok.split("=", 1)
        if k == "baseline":
            baseline = _num(v, "baseline", no)
        elif k == "slope":
            slope = _num(v, "slope", no)
        elif k == "line":
            parts = v.split(":")
            if len(parts) != 3:
                raise ScenarioError(f"material {label}: line must be center:half_width:peak", no)
            try:
                lines.append(LineSpec(*(_num(p, "line", no) for p in parts)))
            except ScenarioError:
                raise
            except ValueError as exc:
                raise ScenarioError(f"material {label}: {exc}", no) from None
        else:
            raise ScenarioError(f"material {label}: unknown field {k!r}", no)
    return MaterialSpec(label, tuple(lines), baseline, slope)


def _parse_sample(value: str, no: int, names: list[str]) -> DesignRow:
    toks = value.split()
    if not toks:
        raise ScenarioError("sample line needs a label", no)
    label, d, w = toks[0], None, np.zeros(len(names))
    for tok in toks[1:]:
        if "=" not in tok:
            raise ScenarioError(f"sample {label}: expected key=value, got {tok!r}", no)
        k, v = tok.split("=", 1)
        if k == "d":
            d = _num(v, "d", no)
        elif k in names:
            w[names.index(k)] = _num(v, k, no)
        else:
            raise ScenarioError(f"sample {label}: unknown material {k!r}", no)
    if d is None:
        raise ScenarioError(f"sample {label}: missing total thickness d=", no)
    try:
        return DesignRow(label, tuple(w), d)
    except ValueError as exc:
        raise ScenarioError(str(exc), no) from None


def read_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read scenario file {str(path)!r}: {exc.strerror}") from None
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(exc.base_message, exc.line, str(path)) from None


def load_scenario(spec: str) -> Scenario:
    """A built-in scenario name or a path to a scenario file."""
    p = Path(spec)
    if not p.exists() and (spec in BUILTIN_SCENARIOS or spec.startswith("quinary_purity")):
        return builtin_scenario(spec)
    if p.exists() or any(ch in spec for ch in "/\\."):
        return read_scenario(p)
    return builtin_scenario(spec)
