"""Raman quantum-memory simulator for light carrying orbital angular momentum.

Submodules:
  modes        — Laguerre-Gaussian modes, propagation factors, geometry checks
  overlap      — triple-mode overlap integrals and conversion coefficients
  kernels      — closed-form write/read kernels and the full-cycle kernel
  dynamics     — direct PDE integrator (the independent oracle)
  memory_cycle — SVD analysis, parameter optimizer, dual-engine cycle runner
  cli          — command-line interface
"""

from .modes import (
    AreaConvention,
    BeamGeometry,
    CellGeometry,
    GeometryError,
    IndexOverflowError,
    beam_radius,
    check_paraxial_constraints,
    fresnel_factors,
    lg_amplitude,
    mode_area,
    normalized_mode,
)
from .overlap import (
    ChiNormalization,
    OverlapRecord,
    QuadratureSpec,
    chi,
    conversion_coefficient,
    scan_chi,
)
from .kernels import (
    KernelGrid,
    MemoryParams,
    bessel_j0,
    f0_factor,
    full_cycle_kernel,
    g_kernel,
)
from .dynamics import (
    FieldState,
    PulseProfile,
    SimGrids,
    apply_storage,
    evolve_read,
    evolve_write,
    gaussian_pulse,
)
from .memory_cycle import (
    CycleReport,
    Engine,
    discretize_and_decompose,
    optimize_parameters,
    run_cycle,
)

__version__ = "0.1.0"
