"""Triple-mode overlap integrals, conversion coefficients and parameter scans.

The central object is the overlap

    chi_{l,m}(z_S) = 2*pi * int_0^inf rho d rho
                     Uhat_{l-m}(rho, 0) * Uhat_m(rho, z_S) * conj(Uhat_l(rho, 0))

between the signal mode l, the driving mode m focused a distance z_S away,
and the coherence mode l - m.  The azimuthal integral is a pure phase
integral and is done analytically: it vanishes unless the coherence index
equals l - m (a Kronecker delta), so only the radial quadrature is numerical.
The drive's propagation phase (curvature + Gouy) is kept, so chi is complex
in general.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .modes import (
    AreaConvention,
    BeamGeometry,
    beam_radius,
    check_mode_index,
    lg_amplitude,
    mode_area,
    normalized_radial_mode,
)

__all__ = [
    "ChiNormalization",
    "ConversionCoefficient",
    "OverlapRecord",
    "QuadratureConvergenceError",
    "QuadratureSpec",
    "chi",
    "chi_selected",
    "conversion_coefficient",
    "scan_chi",
    "triple_product_quadrature",
]


class QuadratureConvergenceError(RuntimeError):
    """Quadrature refinement stalled; carries the last two estimates."""

    def __init__(self, message, last_two=None):
        super().__init__(message)
        self.last_two = last_two


class ChiNormalization:
    """Which dimensionless variant of chi feeds the kernel machinery."""

    APPENDIX = "appendix"   # chi / sqrt(S_l * S_{l-m})
    MAINTEXT = "maintext"   # chi / S_{l-m}


@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed-order Gauss-Legendre on [0, rho_max], refined by order doubling.

    rho_max is ``rho_factor`` times the larger beam radius involved, so the
    Gaussian truncation error is below exp(-2*rho_factor^2) ~ 1e-55 of the
    peak.  The order doubles until successive estimates agree to ``rtol``
    relative; a value is only reported with ``converged`` true.
    """

    order: int = 96
    rho_factor: float = 8.0
    rtol: float = 1e-10
    max_order: int = 1 << 16

    def __post_init__(self):
        if self.order < 64:
            raise ValueError(f"quadrature order must be >= 64, got {self.order}")


@dataclass(frozen=True)
class OverlapRecord:
    """One evaluation of chi_{l,m}(z_S) with all normalizations filled."""

    l: int
    m: int
    n: int                      # coherence index, always l - m
    zs_ratio: float             # z_S / z_R
    chi: complex                # area units
    chi_tilde: complex          # chi / sqrt(S_l S_{l-m})
    chi_over_s: complex         # chi / S_{l-m}
    convention: AreaConvention
    quad_order: int
    converged: bool = True

    def normalized(self, norm: str) -> complex:
        if norm == ChiNormalization.APPENDIX:
            return self.chi_tilde
        if norm == ChiNormalization.MAINTEXT:
            return self.chi_over_s
        raise ValueError(f"unknown chi normalization {norm!r}")


@dataclass(frozen=True)
class ConversionCoefficient:
    """Net amplitude factor for writing with drive OAM J, reading with I.

    ``None`` for I or J means a plane-wave drive (unit factor, no OAM
    transfer).  ``output_oam`` is l + I - J with plane waves counting as 0.
    """

    l: int
    I: object                   # int or None
    J: object                   # int or None
    value: complex
    output_oam: int
    convention: AreaConvention


@lru_cache(maxsize=64)
def _gl_nodes(order: int):
    x, w = roots_legendre(order)
    return x, w


def _gauss_legendre(order: int, a: float, b: float):
    x, w = _gl_nodes(order)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _radial_chi(l: int, m: int, z_s: float, geom: BeamGeometry,
                conv: AreaConvention, order: int) -> complex:
    rho_max_factor = 8.0
    rho_max = rho_max_factor * max(float(beam_radius(geom, 0.0)),
                                   float(beam_radius(geom, z_s)))
    x, wt = _gauss_legendre(order, 0.0, rho_max)
    f = (
        normalized_radial_mode(l - m, x, 0.0, geom, conv)
        * normalized_radial_mode(m, x, z_s, geom, conv)
        * np.conj(normalized_radial_mode(l, x, 0.0, geom, conv))
    )
    return complex(2.0 * math.pi * np.sum(wt * x * f))


def chi(l: int, m: int, geom: BeamGeometry, conv: AreaConvention,
        quad: QuadratureSpec = QuadratureSpec()) -> OverlapRecord:
    """Overlap chi_{l,m}(z_S) with the drive waist offset taken from geom.

    The radial integral is evaluated by Gauss-Legendre quadrature whose
    order doubles until two successive estimates agree to quad.rtol; the
    wide-drive case (large z_S) starts at a proportionally higher order
    because the integration interval grows with the drive radius while the
    integrand stays confined near the signal waist.
    """
    l = check_mode_index(l)
    m = check_mode_index(m)
    z_s = geom.z_s

    # Nodes must keep sub-waist resolution across [0, rho_max].
    rho_max = quad.rho_factor * max(float(beam_radius(geom, 0.0)),
                                    float(beam_radius(geom, z_s)))
    order = max(quad.order, 32 * math.ceil(0.4 * rho_max / geom.w0))

    prev = _radial_chi(l, m, z_s, geom, conv, order)
    converged = False
    while order <= quad.max_order:
        order *= 2
        curr = _radial_chi(l, m, z_s, geom, conv, order)
        scale = max(abs(curr), abs(prev), 1e-300)
        if abs(curr - prev) <= quad.rtol * scale or abs(curr) < 1e-14:
            converged = True
            break
        prev = curr
    if not converged:
        raise QuadratureConvergenceError(
            f"chi({l},{m}) quadrature did not converge by order {order}",
            last_two=(prev, curr),
        )

    s_l = mode_area(l, 0.0, geom, conv)
    s_n = mode_area(l - m, 0.0, geom, conv)
    return OverlapRecord(
        l=l,
        m=m,
        n=l - m,
        zs_ratio=z_s / geom.z_r,
        chi=curr,
        chi_tilde=curr / math.sqrt(s_l * s_n),
        chi_over_s=curr / s_n,
        convention=conv,
        quad_order=order,
        converged=True,
    )


def chi_selected(n: int, m: int, l: int, geom: BeamGeometry,
                 conv: AreaConvention,
                 quad: QuadratureSpec = QuadratureSpec()) -> OverlapRecord:
    """Three-index variant: the overlap of Uhat_n, Uhat_m and conj(Uhat_l).

    The azimuthal phase integral enforces n = l - m; for any other n the
    result is exactly zero, returned without touching the quadrature.
    """
    n = check_mode_index(n)
    if n != l - m:
        return OverlapRecord(
            l=check_mode_index(l), m=check_mode_index(m), n=n,
            zs_ratio=geom.z_s / geom.z_r,
            chi=0j, chi_tilde=0j, chi_over_s=0j,
            convention=conv, quad_order=0, converged=True,
        )
    return chi(l, m, geom, conv, quad)


def triple_product_quadrature(n: int, m: int, l: int, geom: BeamGeometry,
                              conv: AreaConvention, *, n_phi: int = 256,
                              order: int = 256) -> complex:
    """Brute-force 2-D quadrature of Uhat_n Uhat_m Uhat_l^* over the plane.

    The azimuthal integral is done numerically here (trapezoid over phi,
    which is spectrally exact for these pure e^{i k phi} integrands), so
    the analytic selection rule of chi() can be verified independently.
    """
    z_s = geom.z_s
    rho_max = 8.0 * max(float(beam_radius(geom, 0.0)),
                        float(beam_radius(geom, z_s)))
    rho, wr = _gauss_legendre(max(order, 32 * math.ceil(0.4 * rho_max / geom.w0)),
                              0.0, rho_max)
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    P, R = np.meshgrid(phi, rho)
    area_factor = math.sqrt(
        mode_area(n, 0.0, geom, conv)
        * mode_area(m, z_s, geom, conv)
        * mode_area(l, 0.0, geom, conv)
    )
    f = (
        lg_amplitude(n, R, P, 0.0, geom)
        * lg_amplitude(m, R, P, z_s, geom)
        * np.conj(lg_amplitude(l, R, P, 0.0, geom))
    ) * area_factor
    dphi = 2.0 * math.pi / n_phi
    return complex(np.sum((wr * rho) @ f) * dphi)


def conversion_coefficient(l: int, I, J, geom: BeamGeometry,
                           conv: AreaConvention,
                           quad: QuadratureSpec = QuadratureSpec(),
                           *, printed_variant: bool = False) -> ConversionCoefficient:
    """Amplitude factor C for a write drive with OAM J and read drive OAM I.

    Implemented as (chi_{l+I-J, I} / S_{l+I-J}) * conj(chi_{l, J}) / S_{l-J};
    the conjugate on the write factor comes from the stored coherence
    entering the readout source term conjugated.  A plane-wave drive
    (I or J given as None) contributes a unit factor and no index shift.

    ``printed_variant`` switches the read overlap to chi_{l-J, I}, an
    alternative indexing that agrees with the default only when I = 0.
    """
    l = check_mode_index(l)
    j_shift = 0 if J is None else int(J)
    i_shift = 0 if I is None else int(I)
    out = l + i_shift - j_shift

    value = 1.0 + 0j
    if J is not None:
        rec_w = chi(l, int(J), geom, conv, quad)
        value *= np.conj(rec_w.chi) / mode_area(l - int(J), 0.0, geom, conv)
    if I is not None:
        l_read = (l - j_shift) if printed_variant else out
        rec_r = chi(l_read, int(I), geom, conv, quad)
        value *= rec_r.chi / mode_area(l_read, 0.0, geom, conv)
    return ConversionCoefficient(
        l=l, I=I, J=J, value=complex(value), output_oam=out, convention=conv,
    )


def scan_chi(l_set, m: int, zs_grid, geom: BeamGeometry, conv: AreaConvention,
             quad: QuadratureSpec = QuadratureSpec()) -> list:
    """Evaluate chi_{l,m} over a grid of waist offsets for each l.

    Returns records in deterministic order: l-major, z_S-minor.  The grid
    is in units of the Rayleigh range and must be strictly increasing.
    """
    zs_grid = np.asarray(zs_grid, dtype=float)
    if zs_grid.size > 1 and not np.all(np.diff(zs_grid) > 0):
        raise ValueError("zs_grid must be strictly increasing")
    records = []
    for l in l_set:
        for zr in zs_grid:
            g = geom.with_offset(zr * geom.z_r)
            records.append(chi(int(l), m, g, conv, quad))
    return records


def scan_peaks(records: list) -> dict:
    """Locate the per-l argmax of |chi_over_s| in a scan_chi result.

    Returns {l: (zs_ratio, peak_record)}; used for the conversion-scan
    annotations and the peak-value regression tests.
    """
    by_l = {}
    for rec in records:
        by_l.setdefault(rec.l, []).append(rec)
    peaks = {}
    for l, recs in sorted(by_l.items()):
        best = max(recs, key=lambda r: abs(r.chi_over_s))
        peaks[l] = (best.zs_ratio, best)
    return peaks
