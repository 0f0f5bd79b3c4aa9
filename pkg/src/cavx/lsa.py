"""Linear stability analysis of the homogeneous state.

Perturbations (dE, dE*, dn) ~ exp(i k x) of the homogeneous solution obey a
3x3 linear system in scaled units (time in 1/kappa, length in sqrt(a)).  The
instability threshold is the smallest homogeneous saturation s0 at which the
growth rate, maximized over transverse wavenumber, crosses zero.  The search
bisects in s0 on the k-maximized growth rate rather than root-finding the
determinant directly: stable complex eigenvalue pairs produce spurious sign
changes in det M, so the determinant is only used as a consistency check at
the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Constants, RB_D2, ScaledParams, detuning_for_theta_eff

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoInstabilityError(RuntimeError):
    """Raised when no growth-rate zero crossing exists below the saturation cap."""


@dataclass(frozen=True)
class HomogeneousState:
    """Homogeneous steady state of the coupled field-density equations.

    Y is the scaled pump intensity |A_I / kappa|^2 required to sustain
    saturation s0; the field phase gauge puts E0 on the real axis.
    """

    s0: float
    E0: complex
    n0: float
    Y: float
    theta_eff: float


@dataclass(frozen=True)
class ThresholdResult:
    s0_th: float
    k_c: float
    pump_Y_th: float
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class ScanRow:
    b0: float
    s0_th: float
    s0_analytic: float
    k_c: float
    i_ext_m1: float
    i_ext_m5: float
    converged: bool


@dataclass(frozen=True)
class ScanResult:
    """Threshold scan over optical density, rows ascending in b0.

    The two intensity columns are the extra-cavity pump intensities (mW/cm^2)
    at effective detunings -1 and -5.
    """

    rows: tuple[ScanRow, ...]

    CSV_HEADER = "b0,s0_th,s0_analytic,k_c,I_ext_m1,I_ext_m5,converged"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.b0!r},{r.s0_th!r},{r.s0_analytic!r},{r.k_c!r},"
                f"{r.i_ext_m1!r},{r.i_ext_m5!r},{int(r.converged)}"
            )
        return "\n".join(lines) + "\n"


def homogeneous_state(s0: float, sp: ScaledParams) -> HomogeneousState:
    """Homogeneous steady state at saturation s0 for the cavity detuning in sp."""
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    theta_eff = sp.Theta + sp.C * sp.Delta / (1.0 + s0)
    Y = s0 * ((1.0 + sp.C / (1.0 + s0)) ** 2 + theta_eff**2)
    return HomogeneousState(
        s0=s0, E0=complex(math.sqrt(s0)), n0=1.0, Y=Y, theta_eff=theta_eff
    )


def pump_for_saturation(s0: float, sp: ScaledParams) -> float:
    """Scaled pump intensity Y sustaining homogeneous saturation s0."""
    return homogeneous_state(s0, sp).Y


def saturation_for_pump(Y: float, sp: ScaledParams, s0_max: float = 1e6) -> float:
    """Invert Y(s0): smallest non-negative s0 whose homogeneous pump equals Y."""
    if Y < 0:
        raise ValueError("Y must be non-negative")
    if Y == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while pump_for_saturation(hi, sp) < Y:
        hi *= 2.0
        if hi > s0_max:
            raise ValueError(f"no homogeneous saturation below {s0_max} for Y={Y}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pump_for_saturation(mid, sp) < Y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_matrix(k2, s0: float, sp: ScaledParams) -> np.ndarray:
    """3x3 linearization at scaled squared wavenumber k2 (may be an array).

    Acts on (dE, dE*, dn) with E0 = sqrt(s0) real.  For array k2 of shape S the
    result has shape S + (3, 3).
    """
    k2 = np.asarray(k2, dtype=float)
    if np.any(k2 < 0):
        raise ValueError("k2 must be non-negative")
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    E0 = math.sqrt(s0)
    P = sp.C * (1.0 + 1j * sp.Delta)
    one = 1.0 + s0
    a = -(1.0 + 1j * sp.Theta) - 1j * k2 - P / one**2
    b = P * s0 / one**2 * np.ones_like(k2)
    c = -P * E0 / one * np.ones_like(k2)
    g = sp.d * k2 * sp.sigma * E0 / one
    h = sp.d * k2
    m = np.empty(k2.shape + (3, 3), dtype=complex)
    m[..., 0, 0] = a
    m[..., 0, 1] = b
    m[..., 0, 2] = c
    m[..., 1, 0] = np.conj(b)
    m[..., 1, 1] = np.conj(a)
    m[..., 1, 2] = np.conj(c)
    m[..., 2, 0] = -g
    m[..., 2, 1] = -g
    m[..., 2, 2] = -h
    return m


def growth_rate(k2: float, s0: float, sp: ScaledParams) -> float:
    """Largest real part over the eigenvalues of the linearization.

    At k2 == 0 the density row vanishes identically (mass conservation); that
    exact zero eigenvalue is excluded so the returned rate reflects genuine
    field relaxation, not the neutral mode.
    """
    m = build_matrix(float(k2), s0, sp)
    if k2 == 0.0:
        ev = np.linalg.eigvals(m[:2, :2])
    else:
        ev = np.linalg.eigvals(m)
    if not np.all(np.isfinite(ev)):
        raise np.linalg.LinAlgError("eigenvalue solve returned non-finite values")
    return float(ev.real.max())


def _max_rate_over_k(
    s0: float, sp_at_s0: ScaledParams, k2_grid: np.ndarray
) -> tuple[float, float]:
    """Maximize the growth rate over a wavenumber grid, golden-section refined.

    Returns (max rate, maximizing k2).
    """
    m = build_matrix(k2_grid, s0, sp_at_s0)
    ev = np.linalg.eigvals(m)
    if not np.all(np.isfinite(ev)):
        raise np.linalg.LinAlgError("eigenvalue solve returned non-finite values")
    rates = ev.real.max(axis=-1)
    i = int(np.argmax(rates))
    if i == 0 or i == len(k2_grid) - 1:
        return float(rates[i]), float(k2_grid[i])

    # golden-section on log k2 between the neighbors of the grid peak
    def f(u: float) -> float:
        return growth_rate(math.exp(u), s0, sp_at_s0)

    lo, hi = math.log(k2_grid[i - 1]), math.log(k2_grid[i + 1])
    u1 = hi - GOLDEN * (hi - lo)
    u2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(u1), f(u2)
    for _ in range(40):
        if f1 < f2:
            lo, u1, f1 = u1, u2, f2
            u2 = lo + GOLDEN * (hi - lo)
            f2 = f(u2)
        else:
            hi, u2, f2 = u2, u1, f1
            u1 = hi - GOLDEN * (hi - lo)
            f1 = f(u1)
        if hi - lo < 1e-10:
            break
    u = 0.5 * (lo + hi)
    return f(u), math.exp(u)


def _rate_at_trial(
    s0: float, sp: ScaledParams, theta_eff: float, k2_grid: np.ndarray
) -> tuple[float, float]:
    """Growth-rate maximum at trial s0 with Theta adjusted to hold theta_eff fixed."""
    theta = detuning_for_theta_eff(theta_eff, s0, sp)
    return _max_rate_over_k(s0, sp.with_theta(theta), k2_grid)


def threshold_at(
    sp: ScaledParams,
    theta_eff: float,
    k2_max: float | None = None,
    s0_cap: float = 10.0,
    rel_tol: float = 1e-6,
    n_k: int = 160,
) -> ThresholdResult:
    """Smallest s0 > 0 at which the k-maximized growth rate crosses zero.

    The bare detuning is recomputed at every trial s0 so the effective detuning
    stays at theta_eff along the search.  Thresholds and critical wavenumbers
    are independent of the diffusivity d, which factors out of the stationary
    condition.
    """
    if k2_max is None:
        k2_max = 100.0 * max(abs(theta_eff), 1.0)
    k2_grid = np.logspace(math.log10(k2_max) - 4.0, math.log10(k2_max), n_k)

    # upward scan for the first sign change of the maximized rate
    s0_grid = np.logspace(-7.0, math.log10(s0_cap), 140)
    bracket = None
    prev_s0 = None
    for s0 in s0_grid:
        rate, _ = _rate_at_trial(float(s0), sp, theta_eff, k2_grid)
        if rate >= 0.0:
            if prev_s0 is None:
                bracket = (s0 / 10.0, float(s0))
            else:
                bracket = (prev_s0, float(s0))
            break
        prev_s0 = float(s0)
    if bracket is None:
        return ThresholdResult(
            s0_th=math.nan,
            k_c=math.nan,
            pump_Y_th=math.nan,
            converged=False,
            message=f"no instability found for s0 up to {s0_cap}",
        )

    lo, hi = bracket
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        rate, _ = _rate_at_trial(mid, sp, theta_eff, k2_grid)
        if rate >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * lo:
            break
    s0_th = math.sqrt(lo * hi)
    _, k_c2 = _rate_at_trial(s0_th, sp, theta_eff, k2_grid)
    theta = detuning_for_theta_eff(theta_eff, s0_th, sp)
    Y = homogeneous_state(s0_th, sp.with_theta(theta)).Y
    return ThresholdResult(
        s0_th=s0_th, k_c=math.sqrt(k_c2), pump_Y_th=Y, converged=True
    )


def threshold_at_fixed_theta(
    sp: ScaledParams,
    k2_max: float | None = None,
    s0_cap: float = 10.0,
    rel_tol: float = 1e-6,
    n_k: int = 160,
) -> ThresholdResult:
    """Threshold with the bare detuning held fixed instead of theta_eff.

    Same search as threshold_at, but the cavity detuning in sp is used as-is at
    every trial saturation, so the effective detuning drifts with s0.
    """
    if k2_max is None:
        k2_max = 100.0 * max(abs(sp.Theta + sp.C * sp.Delta), 1.0)
    k2_grid = np.logspace(math.log10(k2_max) - 4.0, math.log10(k2_max), n_k)
    s0_grid = np.logspace(-7.0, math.log10(s0_cap), 140)
    bracket = None
    prev_s0 = None
    for s0 in s0_grid:
        rate, _ = _max_rate_over_k(float(s0), sp, k2_grid)
        if rate >= 0.0:
            bracket = (s0 / 10.0 if prev_s0 is None else prev_s0, float(s0))
            break
        prev_s0 = float(s0)
    if bracket is None:
        return ThresholdResult(
            s0_th=math.nan,
            k_c=math.nan,
            pump_Y_th=math.nan,
            converged=False,
            message=f"no instability found for s0 up to {s0_cap}",
        )
    lo, hi = bracket
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        rate, _ = _max_rate_over_k(mid, sp, k2_grid)
        if rate >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * lo:
            break
    s0_th = math.sqrt(lo * hi)
    _, k_c2 = _max_rate_over_k(s0_th, sp, k2_grid)
    Y = homogeneous_state(s0_th, sp).Y
    return ThresholdResult(
        s0_th=s0_th, k_c=math.sqrt(k_c2), pump_Y_th=Y, converged=True
    )


def analytic_threshold(sp: ScaledParams) -> float:
    """Low-saturation threshold s0 = 1/(C sigma Delta) = 2T(1+Delta^2)/(b0 sigma Delta)."""
    if sp.C == 0.0:
        raise ValueError("analytic threshold undefined for C = 0 (b0 = 0)")
    if sp.sigma == 0.0:
        raise ValueError("analytic threshold undefined for sigma = 0")
    if sp.Delta == 0.0:
        raise ValueError("analytic threshold undefined for Delta = 0")
    return 1.0 / (sp.C * sp.sigma * sp.Delta)


# Intra- to extra-cavity conversion: resonant build-up |E_cav|^2/|E_in|^2 = T1/T^2,
# so I_ext = I_sat * Y_th * T^2 / T1.  The absolute scale depends on this
# convention; threshold shapes and detuning ratios do not.
BUILDUP_CONVENTION = "I_ext = I_sat * Y_th * T_loss^2 / T1"


def extra_cavity_intensity(
    th: ThresholdResult,
    sp: ScaledParams,
    theta_eff: float,
    consts: Constants = RB_D2,
) -> float:
    """Extra-cavity pump intensity (mW/cm^2) at threshold for a given theta_eff.

    The scaled pump Y is re-evaluated from s0_th at the requested effective
    detuning, so one threshold solve serves several detuning conversions.
    """
    if not th.converged:
        raise ValueError("threshold did not converge; no intensity to convert")
    if sp.T1 <= 0:
        raise ValueError("T1 must be positive")
    s0 = th.s0_th
    Y = s0 * ((1.0 + sp.C / (1.0 + s0)) ** 2 + theta_eff**2)
    return consts.I_sat * Y * sp.T_loss**2 / sp.T1


def scan_b0(
    sp_template: ScaledParams,
    b0_list,
    theta_eff_list=(-1.0, -5.0),
    consts: Constants = RB_D2,
) -> ScanResult:
    """Threshold scan over optical density at fixed effective detunings.

    One threshold solve per (b0, theta_eff); s0_th and k_c are reported from
    the first theta_eff (they agree across detunings to solver tolerance).
    The intensity columns use the first two detunings of theta_eff_list.
    Rows for which no instability exists carry NaN and converged = False; the
    scan continues past them.
    """
    b0s = sorted(float(b) for b in b0_list)
    if not b0s:
        raise ValueError("b0_list must be non-empty")
    if any(b <= 0 for b in b0s):
        raise ValueError("b0 values must be positive")
    thetas = tuple(float(t) for t in theta_eff_list)
    if len(thetas) < 2:
        raise ValueError("need at least two theta_eff values for the intensity columns")
    rows = []
    for b0 in b0s:
        sp = sp_template.with_b0(b0)
        try:
            s0_an = analytic_threshold(sp)
        except ValueError:
            s0_an = math.nan
        results = [threshold_at(sp, te) for te in thetas]
        ok = all(r.converged for r in results)
        first = results[0]
        if ok:
            i1 = extra_cavity_intensity(results[0], sp, thetas[0], consts)
            i5 = extra_cavity_intensity(results[1], sp, thetas[1], consts)
        else:
            i1 = i5 = math.nan
        rows.append(
            ScanRow(
                b0=b0,
                s0_th=first.s0_th if ok else math.nan,
                s0_analytic=s0_an,
                k_c=first.k_c if ok else math.nan,
                i_ext_m1=i1,
                i_ext_m5=i5,
                converged=ok,
            )
        )
    return ScanResult(rows=tuple(rows))
