"""From time traces to thickness-normalized absorption data.

Propagation model (interface losses neglected): a sample of thickness ``d``
attenuates the field amplitude by ``exp(-alpha * d / 2)``, so

    alpha(f) = -(2 / d) * ln |Y(f) / X(f)|

is nonnegative for absorbing samples.  The standardized column of a sample is
``-ln(|Y|/|X|) / l`` with half thickness ``l = d / 2``, which equals the
sample's absorption spectrum and is a convex combination of the pure-material
signatures weighted by their thickness fractions.
"""

from __future__ import annotations

import numpy as np

from .core import FrequencyGrid, SpectrumSet, StandardizedData, TimeTrace, mm_to_cm

__all__ = [
    "dft_bin_indices",
    "fft_spectrum",
    "transfer_magnitude",
    "absorption_spectrum",
    "standardize",
    "affine_fit",
    "AffineFit",
    "alpha_max",
]

_BIN_TOL = 1e-6


def dft_bin_indices(n: int, t_step: float, grid: FrequencyGrid) -> np.ndarray:
    """Map grid frequencies to DFT bins of an ``n``-sample trace.

    Each grid frequency must sit on a bin (within 1e-6 of the bin spacing)
    and below the Nyquist frequency.
    """
    df = 1.0 / (n * t_step)
    nyquist = 0.5 / t_step
    f = grid.frequencies
    if f[-1] > nyquist * (1 + 1e-12) or f[0] < 0:
        raise ValueError(f"grid up to {f[-1]:.6g} THz exceeds the Nyquist frequency {nyquist:.6g} THz")
    pos = f / df
    idx = np.rint(pos).astype(int)
    off = np.abs(pos - idx)
    if np.any(off > _BIN_TOL):
        raise ValueError(
            f"grid frequencies are not on the DFT bins (spacing {df:.6g} THz); "
            f"worst offset {off.max():.3g} bins"
        )
    return idx


def fft_spectrum(trace: TimeTrace, grid: FrequencyGrid) -> np.ndarray:
    """DFT ``sum_n x_n exp(-2 pi i f t_n)`` sampled at the grid bins."""
    idx = dft_bin_indices(trace.n, trace.t_step, grid)
    return np.fft.rfft(trace.samples)[idx]


def transfer_magnitude(sample: np.ndarray, reference: np.ndarray) -> np.ndarray:
    sample = np.asarray(sample)
    ref_mag = np.abs(np.asarray(reference))
    if np.any(ref_mag == 0):
        raise ValueError(f"reference magnitude is zero at band(s) {np.flatnonzero(ref_mag == 0).tolist()}")
    return np.abs(sample) / ref_mag


def absorption_spectrum(H: np.ndarray, d: float) -> np.ndarray:
    """Absorption coefficient (cm^-1) from transfer magnitude and thickness (mm)."""
    H = np.asarray(H, dtype=float)
    if d <= 0:
        raise ValueError(f"thickness must be positive, got {d}")
    if np.any(~(H > 0)):
        raise ValueError("transfer magnitude must be positive at every band")
    return -2.0 * np.log(H) / mm_to_cm(d)


def standardize(spectra: SpectrumSet) -> StandardizedData:
    """Normalized log-magnitude columns, one per sample."""
    half = spectra.thicknesses / 2.0
    cols = []
    for s, l_mm in zip(spectra.samples, half):
        H = transfer_magnitude(s.spectrum, spectra.reference)
        if np.any(~(H > 0)):
            raise ValueError(f"sample {s.label!r}: zero transmitted magnitude")
        cols.append(-np.log(H) / mm_to_cm(l_mm))
    X = np.column_stack(cols) if cols else np.zeros((spectra.grid.k, 0))
    return StandardizedData(spectra.grid, X, half, tuple(spectra.labels))


class AffineFit:
    """Rank-(q-1) affine approximation ``X ~ mean 1^T + basis @ projected``."""

    def __init__(self, mean: np.ndarray, basis: np.ndarray, projected: np.ndarray, singular_values: np.ndarray):
        self.mean = mean
        self.basis = basis
        self.projected = projected
        self.singular_values = singular_values

    def __iter__(self):
        yield self.mean
        yield self.basis
        yield self.projected

    def reconstruct(self) -> np.ndarray:
        return self.mean[:, None] + self.basis @ self.projected

    def project(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if V.ndim == 1:
            return self.basis.T @ (V - self.mean)
        return self.basis.T @ (V - self.mean[:, None])

    def lift(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if P.ndim == 1:
            return self.mean + self.basis @ P
        return self.mean[:, None] + self.basis @ P


def affine_fit(X, q: int) -> AffineFit:
    """Best rank-(q-1) affine fit of the columns of ``X`` via SVD.

    ``X`` may be a :class:`StandardizedData` or a plain k x l array.
    """
    X = np.asarray(X.X if isinstance(X, StandardizedData) else X, dtype=float)
    if q < 2:
        raise ValueError("q must be at least 2")
    k, ell = X.shape
    if ell < q:
        raise ValueError(f"affine fit with q={q} needs at least {q} samples, got {ell}")
    if k < q - 1:
        raise ValueError(f"need at least q-1={q - 1} bands, got {k}")
    mean = X.mean(axis=1)
    U, sv, _ = np.linalg.svd(X - mean[:, None], full_matrices=False)
    basis = U[:, : q - 1]
    # deterministic orientation: largest-magnitude entry of each basis vector positive
    signs = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(q - 1)])
    signs[signs == 0] = 1.0
    basis = basis * signs
    projected = basis.T @ (X - mean[:, None])
    return AffineFit(mean, basis, projected, sv)


def alpha_max(dynamic_range, d: float) -> np.ndarray:
    """Largest measurable absorption (cm^-1) for a field-amplitude dynamic range.

    A power dynamic range in dB converts as ``10 ** (dB / 20)`` before calling.
    """
    DR = np.asarray(dynamic_range, dtype=float)
    if d <= 0:
        raise ValueError("thickness must be positive")
    if np.any(DR < 1):
        raise ValueError("dynamic range must be >= 1")
    return 2.0 * np.log(DR) / mm_to_cm(d)
