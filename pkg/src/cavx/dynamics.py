"""Split-step integration of the coupled cavity-field / atomic-density equations.

Scaled units throughout: time in 1/kappa, transverse length in sqrt(a), so the
field equation reads

    dE/dt = -(1 + i Theta) E + A(r) + i lap E - C (1 + i Delta) n E / (1 + |E|^2)

and the density obeys conserved drift-diffusion transport

    dn/dt = d * div( grad n + sigma n grad ln(1 + s) ),   s = |E|^2,

whose zero-flux stationary state is n ~ (1 + s)^(-sigma) (low-field seekers).

One step is Strang-split: a half step of the field's linear part (loss,
detuning, diffraction) integrated exactly in Fourier space with the static
pump folded into the affine solution, then a full explicit-midpoint step of
the nonlinear field coupling together with the flux-form density transport,
then the second linear half step.  Nonlinear products are dealiased with the
2/3 rule.  Everything is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .params import ScaledParams

TWO_PI = 2.0 * math.pi


class SimulationError(RuntimeError):
    """Numerical failure during time stepping (NaN/Inf detected)."""


class AdiabaticSolveError(RuntimeError):
    """Fixed-point solve of the adiabatic field did not reach tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PumpProfile:
    """Pump envelope in scaled units; amplitude is the scaled rate A_I / kappa.

    kind "plane" ignores width and order; "supergaussian" uses
    A * exp(-(r/width)^(2*order)).
    """

    kind: str = "plane"
    amplitude: complex = 0.0
    width: float = 0.0
    order: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("plane", "supergaussian"):
            raise ValueError(f"unknown pump kind {self.kind!r}")
        if self.kind == "supergaussian":
            if self.width <= 0:
                raise ValueError("supergaussian pump needs width > 0")
            if self.order < 1:
                raise ValueError("supergaussian pump needs order >= 1")


@dataclass(frozen=True)
class SimConfig:
    nx: int = 256
    ny: int = 256
    domain_size: float = 35.0  # scaled length of the x extent; cells are square
    dt: float = 1e-3
    t_end: float = 100.0
    pump: PumpProfile = PumpProfile()
    noise_amplitude: float = 1e-3
    rng_seed: int = 1
    field_mode: str = "dynamic"
    snapshot_stride: int = 1000

    def __post_init__(self) -> None:
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if v < 16 or (v & (v - 1)) != 0:
                raise ValueError(f"{name} must be a power of two >= 16, got {v}")
        if self.domain_size <= 0:
            raise ValueError("domain_size must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be non-negative")
        if self.field_mode not in ("dynamic", "adiabatic"):
            raise ValueError(f"unknown field_mode {self.field_mode!r}")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def dx(self) -> float:
        return self.domain_size / self.nx


@dataclass
class FieldGrid:
    """Complex cavity envelope E on a periodic grid with square cells."""

    values: np.ndarray
    dx: float
    dy: float
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise ValueError("field values must be a 2D array")

    @property
    def saturation(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass
class DensityGrid:
    """Non-negative atomic density, normalized so mean(n) = 1 on a full cloud."""

    values: np.ndarray
    dx: float
    dy: float
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("density values must be a 2D array")
        if np.any(self.values < 0):
            raise ValueError("density must be non-negative")


@dataclass
class SimState:
    field: FieldGrid
    density: DensityGrid
    step_index: int = 0
    clip_events: int = 0

    @property
    def time(self) -> float:
        return self.field.time


@lru_cache(maxsize=16)
def _grid_ops(nx: int, ny: int, dx: float):
    """Cached wavenumber grids and 2/3 dealias masks for an nx x ny grid."""
    kx = TWO_PI * sfft.fftfreq(nx, d=dx)
    ky = TWO_PI * sfft.fftfreq(ny, d=dx)
    kyr = TWO_PI * sfft.rfftfreq(ny, d=dx)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    KXr, KYr = np.meshgrid(kx, kyr, indexing="ij")
    kcut = (2.0 / 3.0) * math.pi / dx
    ops = {
        "KX": KX,
        "KY": KY,
        "K2": KX**2 + KY**2,
        "IKXr": 1j * KXr,
        "IKYr": 1j * KYr,
        "K2r": KXr**2 + KYr**2,
        "dealias": (np.abs(KX) <= kcut) & (np.abs(KY) <= kcut),
        "dealias_r": (np.abs(KXr) <= kcut) & (np.abs(KYr) <= kcut),
    }
    return ops


def grid_coordinates(nx: int, ny: int, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered coordinates with the origin mid-domain."""
    x = (np.arange(nx) - nx / 2) * dx
    y = (np.arange(ny) - ny / 2) * dx
    return np.meshgrid(x, y, indexing="ij")


def pump_array(pump: PumpProfile, nx: int, ny: int, dx: float) -> np.ndarray:
    """Evaluate the pump envelope on the grid."""
    if pump.kind == "plane":
        return np.full((nx, ny), complex(pump.amplitude), dtype=complex)
    X, Y = grid_coordinates(nx, ny, dx)
    r = np.sqrt(X**2 + Y**2)
    return complex(pump.amplitude) * np.exp(-((r / pump.width) ** (2 * pump.order)))


def _check_congruent(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"grid shape mismatch: {a.shape} vs {b.shape}")


def rhs_field(E: FieldGrid, n: DensityGrid, sp: ScaledParams, pump: PumpProfile) -> np.ndarray:
    """Scaled field tendency -(1+i Theta)E + A(r) + i lap E - C(1+i Delta) n E/(1+s)."""
    _check_congruent(E.values, n.values)
    nx, ny = E.values.shape
    ops = _grid_ops(nx, ny, E.dx)
    A = pump_array(pump, nx, ny, E.dx)
    lap = sfft.ifft2(-ops["K2"] * sfft.fft2(E.values))
    s = E.saturation
    coupling = sp.C * (1.0 + 1j * sp.Delta)
    return (
        -(1.0 + 1j * sp.Theta) * E.values
        + A
        + 1j * lap
        - coupling * n.values * E.values / (1.0 + s)
    )


def _density_rhs_arrays(
    n: np.ndarray, s: np.ndarray, sp: ScaledParams, ops, dealias: bool
) -> np.ndarray:
    """d * [lap n + sigma div(n grad ln(1+s))] with spectral derivatives, flux form."""
    lhat = sfft.rfft2(np.log1p(s))
    if dealias:
        lhat *= ops["dealias_r"]
    gx = sfft.irfft2(ops["IKXr"] * lhat, s.shape)
    gy = sfft.irfft2(ops["IKYr"] * lhat, s.shape)
    nhat = sfft.rfft2(n)
    lap = sfft.irfft2(-ops["K2r"] * nhat, s.shape)
    fxhat = sfft.rfft2(n * gx)
    fyhat = sfft.rfft2(n * gy)
    divhat = ops["IKXr"] * fxhat + ops["IKYr"] * fyhat
    if dealias:
        divhat *= ops["dealias_r"]
    div = sfft.irfft2(divhat, s.shape)
    return sp.d * (lap + sp.sigma * div)


def rhs_density(n: DensityGrid, E: FieldGrid, sp: ScaledParams) -> np.ndarray:
    """Scaled density tendency d * div(grad n + sigma n grad ln(1+s)).

    The drift sign makes n ~ (1+s)^(-sigma) stationary; the spatial mean of the
    tendency vanishes identically on the periodic domain.
    """
    _check_congruent(n.values, E.values)
    if np.any(n.values < 0):
        raise ValueError("density must be non-negative")
    nx, ny = n.values.shape
    ops = _grid_ops(nx, ny, n.dx)
    return _density_rhs_arrays(n.values, E.saturation, sp, ops, dealias=False)


def density_equilibrium(E: FieldGrid, sp: ScaledParams) -> DensityGrid:
    """Canonical stationary density (1+s)^(-sigma), normalized to mean 1."""
    n = (1.0 + E.saturation) ** (-sp.sigma)
    n /= n.mean()
    return DensityGrid(values=n, dx=E.dx, dy=E.dy, time=E.time)


def solve_field_adiabatic(
    n: DensityGrid,
    sp: ScaledParams,
    pump: PumpProfile,
    tol: float = 1e-10,
    max_iter: int = 400,
    relax: float = 1.0,
) -> FieldGrid:
    """Stationary field at frozen density by damped Picard iteration.

    Solves 0 = -(1+i Theta)E + A + i lap E - C(1+i Delta) n E/(1+s) by inverting
    the linear operator spectrally each sweep; exact in one iteration for C = 0.
    """
    nx, ny = n.values.shape
    ops = _grid_ops(nx, ny, n.dx)
    A = pump_array(pump, nx, ny, n.dx)
    Ahat = sfft.fft2(A)
    lin = (1.0 + 1j * sp.Theta) + 1j * ops["K2"]
    coupling = sp.C * (1.0 + 1j * sp.Delta)
    E = sfft.ifft2(Ahat / lin)
    omega = relax
    best = math.inf
    for _ in range(max_iter):
        s = np.abs(E) ** 2
        nl = coupling * n.values * E / (1.0 + s)
        E_new = sfft.ifft2(sfft.fft2(A - nl) / lin)
        E = (1.0 - omega) * E + omega * E_new
        s = np.abs(E) ** 2
        residual = (
            -(1.0 + 1j * sp.Theta) * E
            + A
            + 1j * sfft.ifft2(-ops["K2"] * sfft.fft2(E))
            - coupling * n.values * E / (1.0 + s)
        )
        res = float(np.abs(residual).max())
        if res < tol:
            return FieldGrid(values=E, dx=n.dx, dy=n.dy, time=n.time)
        if res > 4.0 * best:
            omega *= 0.5
        best = min(best, res)
    raise AdiabaticSolveError(
        f"adiabatic field solve stalled at residual {best:.3e} "
        f"(target {tol:.1e}, {max_iter} iterations)",
        residual=best,
    )


class Stepper:
    """Precomputed propagators for one (config, params) pair."""

    def __init__(self, cfg: SimConfig, sp: ScaledParams):
        self.cfg = cfg
        self.sp = sp
        self.ops = _grid_ops(cfg.nx, cfg.ny, cfg.dx)
        self.pump = pump_array(cfg.pump, cfg.nx, cfg.ny, cfg.dx)
        k2_full = float(self.ops["K2"].max())
        dt_diffusion = 2.0 / (sp.d * k2_full) if sp.d > 0 else math.inf
        if cfg.dt > dt_diffusion:
            raise ValueError(
                f"dt={cfg.dt} exceeds the explicit diffusion bound "
                f"2/(d*k2_max)={dt_diffusion:.4g}"
            )
        Lk = -(1.0 + 1j * sp.Theta) - 1j * self.ops["K2"]
        self.expL_half = np.exp(Lk * (cfg.dt / 2.0))
        self.affine_half = (self.expL_half - 1.0) / Lk * sfft.fft2(self.pump)
        self.coupling = sp.C * (1.0 + 1j * sp.Delta)

    def _nl_field(self, E: np.ndarray, n: np.ndarray, s: np.ndarray) -> np.ndarray:
        return -self.coupling * n * E / (1.0 + s)

    def advance_spectral(
        self, Ehat: np.ndarray, n: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, int]:
        """One Strang step acting on the spectral field; returns clip count."""
        dt = self.cfg.dt
        Ehat = Ehat * self.expL_half + self.affine_half
        E = sfft.ifft2(Ehat)
        s = np.abs(E) ** 2
        kE1 = self._nl_field(E, n, s)
        kn1 = _density_rhs_arrays(n, s, self.sp, self.ops, dealias=True)
        Em = E + 0.5 * dt * kE1
        nm = n + 0.5 * dt * kn1
        sm = np.abs(Em) ** 2
        E = E + dt * self._nl_field(Em, nm, sm)
        n = n + dt * _density_rhs_arrays(nm, sm, self.sp, self.ops, dealias=True)
        clips = 0
        if n.min() < 0.0:
            clips = 1
            neg_mean = np.minimum(n, 0.0).mean()
            n = np.maximum(n, 0.0)
            n += neg_mean  # uniform redistribution of the clipped mass
            np.maximum(n, 0.0, out=n)
        Ehat = sfft.fft2(E)
        Ehat *= self.ops["dealias"]
        Ehat = Ehat * self.expL_half + self.affine_half
        return Ehat, n, clips

    def advance_adiabatic(self, n: np.ndarray, time: float) -> tuple[np.ndarray, np.ndarray, int]:
        """Midpoint density step with the field re-solved at each stage."""
        dt = self.cfg.dt
        grid = DensityGrid(values=n, dx=self.cfg.dx, dy=self.cfg.dx, time=time)
        E1 = solve_field_adiabatic(grid, self.sp, self.cfg.pump).values
        kn1 = _density_rhs_arrays(n, np.abs(E1) ** 2, self.sp, self.ops, dealias=True)
        nm = n + 0.5 * dt * kn1
        grid_m = DensityGrid(values=np.maximum(nm, 0.0), dx=self.cfg.dx, dy=self.cfg.dx, time=time)
        Em = solve_field_adiabatic(grid_m, self.sp, self.cfg.pump).values
        n = n + dt * _density_rhs_arrays(nm, np.abs(Em) ** 2, self.sp, self.ops, dealias=True)
        clips = 0
        if n.min() < 0.0:
            clips = 1
            neg_mean = np.minimum(n, 0.0).mean()
            n = np.maximum(n, 0.0)
            n += neg_mean
            np.maximum(n, 0.0, out=n)
        return Em, n, clips


def step(state: SimState, sp: ScaledParams, cfg: SimConfig, stepper: Stepper | None = None) -> SimState:
    """Advance one time step; deterministic function of state, params and config."""
    if stepper is None:
        stepper = Stepper(cfg, sp)
    t_new = state.time + cfg.dt
    if cfg.field_mode == "adiabatic":
        E, n, clips = stepper.advance_adiabatic(state.density.values, state.time)
    else:
        Ehat = sfft.fft2(state.field.values)
        Ehat, n, clips = stepper.advance_spectral(Ehat, state.density.values)
        E = sfft.ifft2(Ehat)
    if not np.all(np.isfinite(n)) or not np.all(np.isfinite(E)):
        max_e = float(np.nanmax(np.abs(E)))
        raise SimulationError(
            f"non-finite state at t={t_new:.6g} (max |E| = {max_e:.3e})"
        )
    dx = cfg.dx
    return SimState(
        field=FieldGrid(values=E, dx=dx, dy=dx, time=t_new),
        density=DensityGrid(values=n, dx=dx, dy=dx, time=t_new),
        step_index=state.step_index + 1,
        clip_events=state.clip_events + clips,
    )


def initial_state(cfg: SimConfig, sp: ScaledParams) -> SimState:
    """Initial condition: stationary field for n = 1, plus seeded density noise.

    The density noise is uniform in [-1/2, 1/2], mean-removed, scaled by
    noise_amplitude; the field starts on the homogeneous (plane pump) or
    adiabatic (structured pump) stationary solution of the unperturbed cloud.
    """
    dx = cfg.dx
    ones = DensityGrid(values=np.ones((cfg.nx, cfg.ny)), dx=dx, dy=dx, time=0.0)
    if cfg.pump.kind == "plane":
        from .lsa import saturation_for_pump  # local import, no cycle at module load

        Y = abs(complex(cfg.pump.amplitude)) ** 2
        s0 = saturation_for_pump(Y, sp)
        denom = 1.0 + 1j * sp.Theta + sp.C * (1.0 + 1j * sp.Delta) / (1.0 + s0)
        E0 = complex(cfg.pump.amplitude) / denom
        E = np.full((cfg.nx, cfg.ny), E0, dtype=complex)
        field = FieldGrid(values=E, dx=dx, dy=dx, time=0.0)
    else:
        field = solve_field_adiabatic(ones, sp, cfg.pump)
    rng = np.random.default_rng(cfg.rng_seed)
    u = rng.uniform(-0.5, 0.5, size=(cfg.nx, cfg.ny))
    u -= u.mean()
    n = 1.0 + cfg.noise_amplitude * u
    if n.min() < 0:
        raise ValueError("noise_amplitude too large: initial density went negative")
    density = DensityGrid(values=n, dx=dx, dy=dx, time=0.0)
    return SimState(field=field, density=density)


def simulate(cfg: SimConfig, sp: ScaledParams):
    """Generator of snapshots every snapshot_stride steps (initial state included).

    Fully deterministic per rng_seed.  Numerical failures raise SimulationError
    annotated with the failing time.
    """
    stepper = Stepper(cfg, sp)
    state = initial_state(cfg, sp)
    yield state
    n_steps = int(round(cfg.t_end / cfg.dt))
    if cfg.field_mode == "adiabatic":
        current = state
        for i in range(n_steps):
            current = step(current, sp, cfg, stepper)
            if current.step_index % cfg.snapshot_stride == 0 or i == n_steps - 1:
                yield current
        return
    # dynamic mode streams the spectral field between steps
    Ehat = sfft.fft2(state.field.values)
    n = state.density.values
    clip_total = 0
    dx = cfg.dx
    for i in range(n_steps):
        Ehat, n, clips = stepper.advance_spectral(Ehat, n)
        clip_total += clips
        idx = i + 1
        if not np.all(np.isfinite(n)):
            E = sfft.ifft2(Ehat)
            max_e = float(np.nanmax(np.abs(E)))
            raise SimulationError(
                f"non-finite state at t={idx * cfg.dt:.6g} (max |E| = {max_e:.3e})"
            )
        if idx % cfg.snapshot_stride == 0 or idx == n_steps:
            E = sfft.ifft2(Ehat)
            t = idx * cfg.dt
            if not np.all(np.isfinite(E)):
                max_e = float(np.nanmax(np.abs(E)))
                raise SimulationError(
                    f"non-finite state at t={t:.6g} (max |E| = {max_e:.3e})"
                )
            yield SimState(
                field=FieldGrid(values=E, dx=dx, dy=dx, time=t),
                density=DensityGrid(values=n.copy(), dx=dx, dy=dx, time=t),
                step_index=idx,
                clip_events=clip_total,
            )
