"""Physical constants, experiment parameters and their dimensionless model counterparts.

The model works in scaled units: time in 1/kappa (cavity linewidth), transverse
length in sqrt(a) where a = l_eff / (k0 * T_loss) is the diffraction coefficient.
In these units the intra-cavity field equation has unit loss and unit diffraction,
and the atomic transport brings in a single dimensionless diffusivity d = D / (kappa * a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Dimensionless diffusivity assumed when no physical cloud diffusivity is given.
DEFAULT_DIMENSIONLESS_DIFFUSIVITY = 0.01


@dataclass(frozen=True)
class Constants:
    """Fundamental constants plus the Rb D2 line data used for unit conversions."""

    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23  # J / K
    c: float = 2.99792458e8  # m / s
    Gamma_Rb: float = TWO_PI * 6.065e6  # rad / s, Rb D2 natural linewidth
    I_sat: float = 1.6  # mW / cm^2, Rb saturation intensity

    def __post_init__(self) -> None:
        for name in ("hbar", "k_B", "c", "Gamma_Rb", "I_sat"):
            if getattr(self, name) <= 0:
                raise ValueError(f"Constants.{name} must be strictly positive")


RB_D2 = Constants()


@dataclass(frozen=True)
class PhysicalParams:
    """Experiment-side numbers, SI units unless noted.

    Theta and Delta are dimensionless detunings: Theta is the cavity detuning of
    the mean-field model, Delta the atom-light detuning in units of Gamma/2.
    D_diff is the spatial diffusivity of the cloud in m^2/s; when None, the
    dimensionless diffusivity defaults to DEFAULT_DIMENSIONLESS_DIFFUSIVITY
    (only transient timescales depend on it, not instability thresholds).
    """

    lambda0: float = 780e-9  # pump wavelength, m
    L_cav: float = 0.1  # cavity length, m
    l_eff: float = 100e-6  # effective diffractive length, m
    R_eff: float = math.exp(-0.01)  # effective round-trip reflectivity
    T1: float = 0.006  # incoupling mirror transmission
    Delta: float = 50.0  # atom-light detuning, units of Gamma/2
    Theta: float = -2.0  # cavity detuning, dimensionless
    b0: float = 1.0  # on-resonance optical density
    temperature: float = 150e-6  # cloud temperature, K
    D_diff: float | None = None  # cloud diffusivity, m^2/s

    def __post_init__(self) -> None:
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.L_cav <= 0:
            raise ValueError("L_cav must be positive")
        if self.l_eff <= 0:
            raise ValueError("l_eff must be positive")
        if self.l_eff > self.L_cav:
            raise ValueError("l_eff must not exceed L_cav")
        if not 0.0 < self.R_eff < 1.0:
            raise ValueError("R_eff must lie strictly inside (0, 1)")
        if self.T1 <= 0:
            raise ValueError("T1 must be positive")
        if self.b0 < 0:
            raise ValueError("b0 must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.D_diff is not None and self.D_diff <= 0:
            raise ValueError("D_diff must be positive when given")

    @property
    def T_loss(self) -> float:
        """Effective cavity loss parameter, T = -ln(R_eff) > 0."""
        return -math.log(self.R_eff)


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless parameters of the coupled field-density model."""

    kappa: float  # cavity linewidth, rad/s
    C: float  # cooperativity
    sigma: float  # dipole-potential / temperature ratio
    a: float  # diffraction coefficient, m^2
    d: float  # dimensionless diffusivity D / (kappa a)
    k0: float  # pump wavenumber, 1/m
    Theta: float
    Delta: float
    b0: float
    T_loss: float
    T1: float

    def with_b0(self, b0: float) -> "ScaledParams":
        """Same cavity and cloud, different optical density (C scales with b0)."""
        if b0 < 0:
            raise ValueError("b0 must be non-negative")
        C = b0 / (2.0 * self.T_loss * (1.0 + self.Delta**2))
        return ScaledParams(
            kappa=self.kappa,
            C=C,
            sigma=self.sigma,
            a=self.a,
            d=self.d,
            k0=self.k0,
            Theta=self.Theta,
            Delta=self.Delta,
            b0=b0,
            T_loss=self.T_loss,
            T1=self.T1,
        )

    def with_theta(self, theta: float) -> "ScaledParams":
        return ScaledParams(
            kappa=self.kappa,
            C=self.C,
            sigma=self.sigma,
            a=self.a,
            d=self.d,
            k0=self.k0,
            Theta=theta,
            Delta=self.Delta,
            b0=self.b0,
            T_loss=self.T_loss,
            T1=self.T1,
        )


def scale_params(p: PhysicalParams, consts: Constants = RB_D2) -> ScaledParams:
    """Nondimensionalize experiment parameters.

    kappa = c T / (2 L_cav), C = b0 / (2 T (1 + Delta^2)),
    sigma = hbar Gamma Delta / (4 k_B temperature), a = l_eff / (k0 T).
    """
    T = p.T_loss
    k0 = TWO_PI / p.lambda0
    kappa = consts.c * T / (2.0 * p.L_cav)
    C = p.b0 / (2.0 * T * (1.0 + p.Delta**2))
    sigma = consts.hbar * consts.Gamma_Rb * p.Delta / (4.0 * consts.k_B * p.temperature)
    a = p.l_eff / (k0 * T)
    if p.D_diff is None:
        d = DEFAULT_DIMENSIONLESS_DIFFUSIVITY
    else:
        d = p.D_diff / (kappa * a)
    return ScaledParams(
        kappa=kappa,
        C=C,
        sigma=sigma,
        a=a,
        d=d,
        k0=k0,
        Theta=p.Theta,
        Delta=p.Delta,
        b0=p.b0,
        T_loss=T,
        T1=p.T1,
    )


def pattern_period(L_diffractive: float, lambda0: float, delta_phi: float) -> float:
    """Transverse pattern period Lambda = sqrt(2 pi L lambda / delta_phi), in m.

    delta_phi is the diffractive phase mismatch between the on-axis pump and the
    cavity-resonant sideband.
    """
    if L_diffractive <= 0:
        raise ValueError("L_diffractive must be positive")
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    if delta_phi <= 0:
        raise ValueError("delta_phi must be positive")
    return math.sqrt(TWO_PI * L_diffractive * lambda0 / delta_phi)


def sideband_angle(delta_phi: float, k0: float, L_diffractive: float) -> float:
    """Angle of the cavity-resonant sideband, phi = sqrt(delta_phi / (k0 L)), rad.

    Exactly satisfies k0 * phi == 2 pi / pattern_period(L, lambda, delta_phi);
    with sin(phi) in place of phi the identity holds to O(phi^2 / 6).
    """
    if delta_phi < 0:
        raise ValueError("delta_phi must be non-negative")
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    if L_diffractive <= 0:
        raise ValueError("L_diffractive must be positive")
    return math.sqrt(delta_phi / (k0 * L_diffractive))


def detuning_for_theta_eff(theta_eff: float, s0: float, sp: ScaledParams) -> float:
    """Bare cavity detuning that realizes a given effective detuning at saturation s0.

    Theta_eff = Theta + C Delta / (1 + s0), so Theta = Theta_eff - C Delta / (1 + s0).
    """
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    return theta_eff - sp.C * sp.Delta / (1.0 + s0)


def theta_eff_of(theta: float, s0: float, sp: ScaledParams) -> float:
    """Effective cavity detuning Theta_eff = Theta + C Delta / (1 + s0)."""
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    return theta + sp.C * sp.Delta / (1.0 + s0)
