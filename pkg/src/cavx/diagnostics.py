"""Pattern diagnostics: dominant wavenumber, hexagonal order, bunching, correlations.

All spectral measures work on the 2D power spectrum of the mean-removed input
and are invariant under grid translations and 90-degree rotations.  Hexagonal
order is scored by the angular autocorrelation of the power on the dominant
spectral ring at 60 degrees, which separates hexagons (near 1) from stripes
and squares (near 0) without any peak-picking heuristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi

RING_HALF_WIDTH_BINS = 1.5
MAX_PEAKS = 12


@dataclass
class SpectrumReport:
    """One snapshot's worth of pattern numbers.

    k_dominant and hexagonality are None when the input carries no dominant
    length scale; field_density_correlation is None when either input is
    spatially constant.
    """

    k_dominant: float | None
    ring_power_fraction: float
    hexagonality: float | None
    bunching: float
    field_density_correlation: float | None
    peak_list: list[tuple[float, float, float]] = field(default_factory=list)

    CSV_HEADER = "k_dominant,ring_power_fraction,hexagonality,bunching,field_density_correlation,peak_count"
    PEAKS_CSV_HEADER = "kx,ky,power"

    def to_csv_row(self) -> str:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return (
            f"{fmt(self.k_dominant)},{fmt(self.ring_power_fraction)},"
            f"{fmt(self.hexagonality)},{fmt(self.bunching)},"
            f"{fmt(self.field_density_correlation)},{len(self.peak_list)}"
        )

    def to_csv(self) -> str:
        return self.CSV_HEADER + "\n" + self.to_csv_row() + "\n"

    def peaks_to_csv(self) -> str:
        lines = [self.PEAKS_CSV_HEADER]
        for kx, ky, p in self.peak_list:
            lines.append(f"{kx!r},{ky!r},{p!r}")
        return "\n".join(lines) + "\n"


def _as_array(grid) -> np.ndarray:
    return np.asarray(getattr(grid, "values", grid))


def _hann2d(nx: int, ny: int) -> np.ndarray:
    wx = 0.5 * (1.0 - np.cos(TWO_PI * np.arange(nx) / nx))
    wy = 0.5 * (1.0 - np.cos(TWO_PI * np.arange(ny) / ny))
    return np.outer(wx, wy)


def _power_spectrum(values: np.ndarray, dx: float, window: bool):
    """Power spectrum of the mean-removed field plus wavenumber geometry."""
    f = values - values.mean()
    if window:
        f = f * _hann2d(*f.shape)
    P = np.abs(sfft.fft2(f)) ** 2
    P[0, 0] = 0.0
    nx, ny = f.shape
    kx = TWO_PI * sfft.fftfreq(nx, d=dx)
    ky = TWO_PI * sfft.fftfreq(ny, d=dx)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    kmag = np.hypot(KX, KY)
    dk = max(TWO_PI / (nx * dx), TWO_PI / (ny * dx))
    return P, KX, KY, kmag, dk


def _radial_profile(P: np.ndarray, kmag: np.ndarray, dk: float):
    nbins = int(kmag.max() / dk) + 2
    idx = np.minimum((kmag / dk + 0.5).astype(int), nbins - 1)
    sums = np.bincount(idx.ravel(), weights=P.ravel(), minlength=nbins)
    counts = np.bincount(idx.ravel(), minlength=nbins)
    prof = sums / np.maximum(counts, 1)
    return prof, idx


def _dominant_bin(prof: np.ndarray, dk: float, k_min: float) -> int | None:
    i0 = max(1, int(math.ceil(k_min / dk)))
    if i0 >= len(prof) or not np.any(prof[i0:] > 0):
        return None
    return i0 + int(np.argmax(prof[i0:]))


def _refine_peak(prof: np.ndarray, i: int, dk: float) -> float:
    if i <= 0 or i >= len(prof) - 1:
        return i * dk
    denom = prof[i - 1] - 2.0 * prof[i] + prof[i + 1]
    if denom == 0.0:
        return i * dk
    delta = 0.5 * (prof[i - 1] - prof[i + 1]) / denom
    delta = max(-0.5, min(0.5, delta))
    return (i + delta) * dk


def _is_flat(values: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    return float(values.std()) < 1e-14 * scale


def dominant_wavenumber(
    grid, dx: float | None = None, window: bool = False, k_min: float = 0.0
) -> float | None:
    """Radius of the maximum of the azimuthally averaged power spectrum.

    The DC bin is always excluded; k_min excludes additional low-k bins (useful
    to skip a finite pump envelope).  The peak is refined by quadratic
    interpolation over adjacent radial bins.  Returns None for flat input,
    which is distinct from a genuine k = 0 report.
    """
    values = _as_array(grid).real.astype(float)
    if dx is None:
        dx = getattr(grid, "dx")
    if _is_flat(values):
        return None
    P, _, _, kmag, dk = _power_spectrum(values, dx, window)
    prof, _ = _radial_profile(P, kmag, dk)
    i = _dominant_bin(prof, dk, k_min)
    if i is None:
        return None
    return _refine_peak(prof, i, dk)


def _ring_quantities(values: np.ndarray, dx: float, window: bool, k_min: float):
    """Shared machinery: ring mask, ring power fraction, angular power profile."""
    P, KX, KY, kmag, dk = _power_spectrum(values, dx, window)
    prof, _ = _radial_profile(P, kmag, dk)
    i = _dominant_bin(prof, dk, k_min)
    if i is None:
        return None
    k_dom = _refine_peak(prof, i, dk)
    ring = (kmag > (i - RING_HALF_WIDTH_BINS) * dk) & (
        kmag < (i + RING_HALF_WIDTH_BINS) * dk
    )
    total = P.sum()
    ring_fraction = float(P[ring].sum() / total) if total > 0 else 0.0

    # angular bins: a multiple of 12 so 60 and 90 degree shifts map bins exactly
    n_theta = 12 * max(3, min(30, round(math.pi * i / 6.0)))
    theta = np.arctan2(KY[ring], KX[ring])
    tbin = ((theta + math.pi) / TWO_PI * n_theta).astype(int) % n_theta
    sums = np.bincount(tbin, weights=P[ring], minlength=n_theta)
    counts = np.bincount(tbin, minlength=n_theta)
    p_theta = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    if np.isnan(p_theta).any():
        p_theta = np.where(np.isnan(p_theta), np.nanmean(p_theta), p_theta)
    # light circular smoothing, +/- one bin
    p_theta = (p_theta + np.roll(p_theta, 1) + np.roll(p_theta, -1)) / 3.0
    return k_dom, ring, ring_fraction, p_theta, P, KX, KY


def hexagonality(
    grid, dx: float | None = None, window: bool = False, k_min: float = 0.0
) -> float | None:
    """Angular autocorrelation of the dominant-ring power at 60 degrees.

    Mean-centered so uncorrelated angular noise scores about 0; an ideal
    three-mode hexagon scores about 1 and stripe or square patterns stay low.
    Returns None when no dominant scale exists.
    """
    values = _as_array(grid).real.astype(float)
    if dx is None:
        dx = getattr(grid, "dx")
    if _is_flat(values):
        return None
    rq = _ring_quantities(values, dx, window, k_min)
    if rq is None:
        return None
    _, _, _, p_theta, _, _, _ = rq
    centered = p_theta - p_theta.mean()
    denom = float(np.dot(centered, centered))
    if denom <= 0.0:
        return None
    shift = len(centered) // 6  # exactly 60 degrees
    return float(np.dot(centered, np.roll(centered, shift)) / denom)


def bunching_contrast(n) -> float:
    """Density modulation depth std(n)/mean(n)."""
    values = _as_array(n).astype(float)
    mean = values.mean()
    if mean <= 0:
        raise ValueError("bunching contrast needs mean(n) > 0")
    return float(values.std() / mean)


def field_density_correlation(E, n) -> float:
    """Pearson correlation of the saturation s = |E|^2 against the density."""
    Ev = _as_array(E)
    s = np.abs(Ev) ** 2 if np.iscomplexobj(Ev) else Ev.astype(float)
    nv = _as_array(n).astype(float)
    if s.shape != nv.shape:
        raise ValueError(f"grid shape mismatch: {s.shape} vs {nv.shape}")
    if s.std() == 0.0 or nv.std() == 0.0:
        raise ValueError("correlation undefined for spatially constant input")
    return float(np.corrcoef(s.ravel(), nv.ravel())[0, 1])


def _find_peaks(P: np.ndarray, ring: np.ndarray, KX: np.ndarray, KY: np.ndarray):
    """Local maxima of the spectrum inside the ring band, strongest first."""
    is_max = np.ones_like(P, dtype=bool)
    for ax, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        is_max &= P >= np.roll(P, shift, axis=ax)
    for sx in (1, -1):
        for sy in (1, -1):
            is_max &= P >= np.roll(np.roll(P, sx, axis=0), sy, axis=1)
    cand = np.argwhere(is_max & ring & (P > 0))
    peaks = [
        (float(KX[i, j]), float(KY[i, j]), float(P[i, j])) for i, j in cand
    ]
    peaks.sort(key=lambda t: (-t[2], t[0], t[1]))
    return peaks[:MAX_PEAKS]


def analyze(
    E_or_s,
    n,
    dx: float | None = None,
    window: bool = False,
    k_min: float = 0.0,
) -> SpectrumReport:
    """Full SpectrumReport for a field (or intensity) and density snapshot pair."""
    Ev = _as_array(E_or_s)
    s = np.abs(Ev) ** 2 if np.iscomplexobj(Ev) else Ev.astype(float)
    nv = _as_array(n).astype(float)
    if dx is None:
        dx = getattr(E_or_s, "dx", None) or getattr(n, "dx")
    bunch = bunching_contrast(nv)
    try:
        corr = field_density_correlation(s, nv)
    except ValueError:
        corr = None
    if _is_flat(s):
        return SpectrumReport(
            k_dominant=None,
            ring_power_fraction=0.0,
            hexagonality=None,
            bunching=bunch,
            field_density_correlation=corr,
        )
    rq = _ring_quantities(s, dx, window, k_min)
    if rq is None:
        return SpectrumReport(
            k_dominant=None,
            ring_power_fraction=0.0,
            hexagonality=None,
            bunching=bunch,
            field_density_correlation=corr,
        )
    k_dom, ring, ring_fraction, p_theta, P, KX, KY = rq
    centered = p_theta - p_theta.mean()
    denom = float(np.dot(centered, centered))
    hexv = None
    if denom > 0.0:
        shift = len(centered) // 6
        hexv = float(np.dot(centered, np.roll(centered, shift)) / denom)
    return SpectrumReport(
        k_dominant=k_dom,
        ring_power_fraction=ring_fraction,
        hexagonality=hexv,
        bunching=bunch,
        field_density_correlation=corr,
        peak_list=_find_peaks(P, ring, KX, KY),
    )
