"""Optomechanical transverse crystallization in a longitudinally pumped cavity.

Linear stability analysis of the coupled cavity-field / atomic-density model,
split-step pseudo-spectral simulation of the pattern-forming dynamics, and
pattern diagnostics.
"""

__version__ = "0.1.0"

from .params import (
    Constants,
    PhysicalParams,
    RB_D2,
    ScaledParams,
    detuning_for_theta_eff,
    pattern_period,
    scale_params,
    sideband_angle,
    theta_eff_of,
)
from .lsa import (
    HomogeneousState,
    ScanResult,
    ThresholdResult,
    analytic_threshold,
    build_matrix,
    extra_cavity_intensity,
    growth_rate,
    homogeneous_state,
    scan_b0,
    threshold_at,
)
from .dynamics import (
    DensityGrid,
    FieldGrid,
    PumpProfile,
    SimConfig,
    SimState,
    density_equilibrium,
    rhs_density,
    rhs_field,
    simulate,
    solve_field_adiabatic,
    step,
)
from .diagnostics import (
    SpectrumReport,
    analyze,
    bunching_contrast,
    dominant_wavenumber,
    field_density_correlation,
    hexagonality,
)

__all__ = [
    "Constants",
    "PhysicalParams",
    "RB_D2",
    "ScaledParams",
    "detuning_for_theta_eff",
    "pattern_period",
    "scale_params",
    "sideband_angle",
    "theta_eff_of",
    "HomogeneousState",
    "ScanResult",
    "ThresholdResult",
    "analytic_threshold",
    "build_matrix",
    "extra_cavity_intensity",
    "growth_rate",
    "homogeneous_state",
    "scan_b0",
    "threshold_at",
    "DensityGrid",
    "FieldGrid",
    "PumpProfile",
    "SimConfig",
    "SimState",
    "density_equilibrium",
    "rhs_density",
    "rhs_field",
    "simulate",
    "solve_field_adiabatic",
    "step",
    "SpectrumReport",
    "analyze",
    "bunching_contrast",
    "dominant_wavenumber",
    "field_density_correlation",
    "hexagonality",
]
