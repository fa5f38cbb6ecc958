"""Laguerre-Gaussian mode functions, paraxial propagation and geometry checks.

Only the lowest radial order is supported; a mode is identified by its integer
azimuthal index m (the orbital-angular-momentum winding number), which may be
negative.  All propagation factors assume the paraxial regime; the constant
carrier phase e^{ikz} is dropped throughout because it carries no dependence
on the mode index or the transverse coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import gammaln

__all__ = [
    "MAX_AZIMUTHAL_INDEX",
    "AreaConvention",
    "BeamGeometry",
    "CellGeometry",
    "GeometryError",
    "IndexOverflowError",
    "FresnelFactors",
    "ValidityReport",
    "beam_radius",
    "check_mode_index",
    "check_paraxial_constraints",
    "fresnel_factors",
    "lg_amplitude",
    "mode_area",
    "normalized_mode",
]

# Above this the factorial in the mode normalization, even via log-gamma,
# amplifies cancellation in the radial polynomial beyond double precision.
MAX_AZIMUTHAL_INDEX = 64

# Default "much smaller / much larger" thresholds for the geometry checker.
DEFAULT_LENGTH_RATIO = 0.1     # L <= 0.1 * z_R passes
DEFAULT_AREA_RTOL = 0.05       # |S - pi w0^2| <= 5% passes
DEFAULT_PARAXIAL_MIN = 10.0    # pi w0 / lambda >= 10 passes


class GeometryError(ValueError):
    """Raised for beam or cell parameters outside the paraxial model."""


class IndexOverflowError(ValueError):
    """Raised when an azimuthal index exceeds the stability cap."""


def check_mode_index(m: int) -> int:
    m = int(m)
    if abs(m) > MAX_AZIMUTHAL_INDEX:
        raise IndexOverflowError(
            f"azimuthal index {m} exceeds cap |m| <= {MAX_AZIMUTHAL_INDEX}"
        )
    return m


class AreaConvention(Enum):
    """Divisor used in the effective mode area pi w^2 (|m|+1) / divisor.

    QUARTER follows the beam-ring-radius convention; HALF is the standard
    effective area of an intensity profile exp(-2 rho^2/w^2) and makes the
    wide-drive limit of the normalized overlap exactly 1.
    """

    QUARTER = 4
    HALF = 2

    @property
    def divisor(self) -> int:
        return self.value


@dataclass(frozen=True)
class BeamGeometry:
    """Transverse beam geometry shared by the signal and driving fields.

    Attributes
    ----------
    w0 : waist radius.
    wavelength : optical wavelength (same length unit as ``w0``).
    z_s : offset of the driving-field waist from the signal waist.
    """

    w0: float
    wavelength: float
    z_s: float = 0.0

    def __post_init__(self):
        if self.w0 <= 0:
            raise GeometryError(f"waist radius must be positive, got {self.w0}")
        if self.wavelength <= 0:
            raise GeometryError(f"wavelength must be positive, got {self.wavelength}")
        if math.pi * self.w0 / self.wavelength < DEFAULT_PARAXIAL_MIN:
            raise GeometryError(
                "paraxial condition pi*w0 >> wavelength violated: "
                f"pi*w0/wavelength = {math.pi * self.w0 / self.wavelength:.3g} < "
                f"{DEFAULT_PARAXIAL_MIN}"
            )

    @property
    def z_r(self) -> float:
        """Rayleigh range pi w0^2 / wavelength."""
        return math.pi * self.w0**2 / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def with_offset(self, z_s: float) -> "BeamGeometry":
        return replace(self, z_s=z_s)


@dataclass(frozen=True)
class CellGeometry:
    """Atomic-ensemble cell: a cylinder of length L and cross section S."""

    length: float
    cross_section: float

    def __post_init__(self):
        if self.length <= 0:
            raise GeometryError(f"cell length must be positive, got {self.length}")
        if self.cross_section <= 0:
            raise GeometryError(
                f"cell cross section must be positive, got {self.cross_section}"
            )


def beam_radius(geom: BeamGeometry, z) -> float:
    """Beam radius w(z) = w0 sqrt(1 + z^2/z_R^2)."""
    return geom.w0 * np.sqrt(1.0 + (np.asarray(z, dtype=float) / geom.z_r) ** 2)


def mode_area(m: int, z: float, geom: BeamGeometry, conv: AreaConvention) -> float:
    """Effective transverse area of the LG mode m in the plane z."""
    m = check_mode_index(m)
    return (
        math.pi
        * geom.w0**2
        * (1.0 + (z / geom.z_r) ** 2)
        * (abs(m) + 1)
        / conv.divisor
    )


def _radial_magnitude(m: int, rho, wz):
    """sqrt(2/(pi wz^2 |m|!)) (rho sqrt2/wz)^{|m|} exp(-rho^2/wz^2), elementwise."""
    am = abs(m)
    rho = np.asarray(rho, dtype=float)
    lognorm = 0.5 * (math.log(2.0) - np.log(math.pi * wz**2) - gammaln(am + 1))
    if am == 0:
        return np.exp(lognorm - rho**2 / wz**2)
    with np.errstate(divide="ignore"):
        logring = am * np.log(np.where(rho > 0, rho * math.sqrt(2.0) / wz, 1.0))
    out = np.exp(lognorm + logring - rho**2 / wz**2)
    return np.where(rho > 0, out, 0.0)


def _propagation_phase(m: int, rho, z: float, geom: BeamGeometry):
    """Curvature plus Gouy phase of the propagated mode; 0 in the waist plane.

    The carrier e^{ikz} is excluded: it is rho- and m-independent.
    """
    rho = np.asarray(rho, dtype=float)
    if z == 0.0:
        return np.zeros_like(rho)
    radius_of_curvature = z * (1.0 + (geom.z_r / z) ** 2)
    gouy = (abs(m) + 1) * math.atan2(z, geom.z_r)
    return geom.wavenumber * rho**2 / (2.0 * radius_of_curvature) - gouy


def lg_amplitude(m: int, rho, phi, z: float, geom: BeamGeometry):
    """Complex LG mode amplitude in the plane z (carrier phase dropped).

    In the waist plane (z = 0) this is the textbook mode; elsewhere the
    standard propagated form with w(z), wavefront curvature and Gouy phase.
    The modes are orthonormal: integral of U*_m U_m' over the transverse
    plane is delta_{m,m'}.
    """
    m = check_mode_index(m)
    wz = float(beam_radius(geom, z))
    mag = _radial_magnitude(m, rho, wz)
    phase = m * np.asarray(phi, dtype=float) + _propagation_phase(m, rho, z, geom)
    return mag * np.exp(1j * phase)


def radial_mode(m: int, rho, z: float, geom: BeamGeometry):
    """lg_amplitude without the e^{im phi} factor (used after the azimuthal
    integral has been done analytically)."""
    m = check_mode_index(m)
    wz = float(beam_radius(geom, z))
    return _radial_magnitude(m, rho, wz) * np.exp(
        1j * _propagation_phase(m, rho, z, geom)
    )


def normalized_mode(m: int, rho, phi, z: float, geom: BeamGeometry,
                    conv: AreaConvention):
    """Dimensionless mode function: lg_amplitude scaled by sqrt(mode area).

    Its squared modulus integrates over the transverse plane to the mode
    area S_m(z), so the on-axis value of the fundamental mode is order one.
    """
    return lg_amplitude(m, rho, phi, z, geom) * math.sqrt(
        mode_area(m, z, geom, conv)
    )


def normalized_radial_mode(m: int, rho, z: float, geom: BeamGeometry,
                           conv: AreaConvention):
    """radial_mode scaled by sqrt(mode area)."""
    return radial_mode(m, rho, z, geom) * math.sqrt(mode_area(m, z, geom, conv))


@dataclass(frozen=True)
class FresnelFactors:
    """Propagation eigenvalue split into modulus A and eikonal Phi.

    ``extra_phase`` is k z (Phi - 1), i.e. the propagation phase with the
    carrier removed; ``at_waist_limit`` flags the removable z = 0 form.
    """

    amplitude: float
    eikonal: float
    extra_phase: float
    at_waist_limit: bool = False


def fresnel_factors(rho: float, z: float, m: int, geom: BeamGeometry) -> FresnelFactors:
    """Fresnel-propagation factors A(rho, z) and Phi(rho, z) of the LG mode m.

    A is the ratio of the propagated to the waist-plane modulus; Phi is the
    eikonal multiplying k z.  At z = 0 the limit A = 1, extra phase 0 is
    returned and flagged.
    """
    m = check_mode_index(m)
    if z == 0.0:
        # Phi itself has a finite z -> 0 limit through arctan(x)/x -> 1.
        lam = geom.wavelength
        eikonal = 1.0 - lam**2 * (abs(m) + 1) / (2.0 * math.pi**2 * geom.w0**2)
        return FresnelFactors(1.0, eikonal, 0.0, at_waist_limit=True)
    lam = geom.wavelength
    w0 = geom.w0
    denom = math.pi**2 * w0**4 + lam**2 * z**2
    amplitude = (math.pi**2 * w0**4 / denom) ** ((abs(m) + 1) / 2.0) * math.exp(
        rho**2 * z**2 * lam**2 / (w0**2 * denom)
    )
    # The two terms of k z (Phi - 1) computed directly: forming Phi first
    # and subtracting 1 would lose ~8 digits to cancellation (Phi - 1 is
    # O(lambda/w0)^2 while k z is its huge reciprocal).
    curvature_phase = geom.wavenumber * z * rho**2 * lam**2 / (2.0 * denom)
    gouy_phase = (abs(m) + 1) * math.atan2(lam * z, math.pi * w0**2)
    extra_phase = curvature_phase - gouy_phase
    eikonal = 1.0 + extra_phase / (geom.wavenumber * z)
    return FresnelFactors(amplitude, eikonal, extra_phase)


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    value: float
    threshold: float
    margin: float


@dataclass
class ValidityReport:
    """Pass/fail record of the diffraction-neglect geometry conditions."""

    conditions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def lines(self) -> list:
        out = []
        for c in self.conditions:
            status = "PASS" if c.passed else "FAIL"
            out.append(
                f"{status}  {c.name}: value={c.value:.6g} "
                f"threshold={c.threshold:.6g} margin={c.margin:.6g}"
            )
        return out


def check_paraxial_constraints(
    geom: BeamGeometry,
    cell: CellGeometry,
    *,
    length_ratio: float = DEFAULT_LENGTH_RATIO,
    area_rtol: float = DEFAULT_AREA_RTOL,
    paraxial_min: float = DEFAULT_PARAXIAL_MIN,
) -> ValidityReport:
    """Check L << pi w0^2/lambda, S ~ pi w0^2 and pi w0 >> lambda.

    Thresholds are overridable; failures are carried in the report, not
    raised.
    """
    report = ValidityReport()

    z_r = geom.z_r
    length_value = cell.length / z_r
    report.conditions.append(
        ConditionCheck(
            name="cell length L << pi*w0^2/lambda (L/z_R)",
            passed=length_value <= length_ratio,
            value=length_value,
            threshold=length_ratio,
            margin=length_ratio - length_value,
        )
    )

    beam_area = math.pi * geom.w0**2
    area_value = abs(cell.cross_section - beam_area) / beam_area
    report.conditions.append(
        ConditionCheck(
            name="cell cross section S ~ pi*w0^2 (relative mismatch)",
            passed=area_value <= area_rtol,
            value=area_value,
            threshold=area_rtol,
            margin=area_rtol - area_value,
        )
    )

    paraxial_value = math.pi * geom.w0 / geom.wavelength
    report.conditions.append(
        ConditionCheck(
            name="paraxiality pi*w0 >> lambda (pi*w0/lambda)",
            passed=paraxial_value >= paraxial_min,
            value=paraxial_value,
            threshold=paraxial_min,
            margin=paraxial_value - paraxial_min,
        )
    )
    return report
