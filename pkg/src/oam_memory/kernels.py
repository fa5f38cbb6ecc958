"""Closed-form kernel machinery for the write/read integral transforms.

The single-stage kernels are time convolutions of elementary factors

    f0(z, t, r) = exp(-i (omega + r) t) * J0( sqrt(z t (1 + r/omega)) ),
    omega = sqrt(r^2 + chi^2),

with the convolution G(z, t) = int_0^t f0(z, t', r) conj(f0(z, t - t', -r)) dt'
serving both the write (field -> coherence) and read (coherence -> field)
directions.  The full memory cycle composes a write kernel at the stored
position with a read kernel over the remaining cell length.

Everything here works in the dimensionless variables t~ = Omega t and
z~ = (2 g^2 N / Omega) z; the drive strength enters only through the
dimensionless overlap chi (1 for a plane-wave drive).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

__all__ = [
    "AuxiliaryFactors",
    "KernelGrid",
    "MemoryParams",
    "StepSizeError",
    "bessel_j0",
    "f0_factor",
    "full_cycle_kernel",
    "g_kernel",
    "g_kernel_grid",
    "g_kernel_raman_limit",
]


class StepSizeError(ValueError):
    """Raised when a requested discretization cannot resolve the dynamics."""


# ---------------------------------------------------------------------------
# Bessel function of the first kind, order zero.
#
# Three regimes, all vectorized:
#   x <= 8   : Taylor series sum_k (-1)^k (x^2/4)^k / (k!)^2.  Worst-case
#              cancellation at x = 8 costs ~2 digits, leaving ~1e-14 absolute.
#   8 < x<18 : midpoint discretization of (1/pi) int_0^pi cos(x sin t) dt
#              with N = 64 points; its error is a sum of J_{2Nk}(x) terms,
#              i.e. below 1e-90 for x < 18.
#   x >= 18  : Hankel asymptotic expansion,
#              J0 ~ sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)],
#              truncated where the terms stop decreasing (< 1e-15 at x = 18).
# ---------------------------------------------------------------------------

_SERIES_CUT = 8.0
_INTEGRAL_CUT = 18.0
_INTEGRAL_POINTS = 64
_INTEGRAL_SINES = np.sin(
    math.pi * (np.arange(_INTEGRAL_POINTS) + 0.5) / _INTEGRAL_POINTS
)


def _j0_series(x):
    q = 0.25 * x * x
    out = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, 25):
        term = term * (-q) / (k * k)
        out = out + term
    return out


def _j0_integral(x):
    return np.mean(np.cos(np.multiply.outer(x, _INTEGRAL_SINES)), axis=-1)


# Coefficients of the P and Q asymptotic series in powers of 1/(8x)^2:
# P_k = (-1)^k   [prod_{j=1}^{2k}   (2j-1)^2] / (2k)!,
# Q_k = (-1)^{k+1} [prod_{j=1}^{2k+1} (2j-1)^2] / (2k+1)!  (times 1/(8x));
# the odd Hankel factors (4*0^2 - (2j-1)^2) contribute the extra minus in Q.
def _hankel_coeffs(n_terms=9):
    p, q = [], []
    for k in range(n_terms):
        num_p = 1.0
        for j in range(1, 2 * k + 1):
            num_p *= (2 * j - 1) ** 2
        num_q = num_p * (4 * k + 1) ** 2
        p.append((-1) ** k * num_p / math.factorial(2 * k))
        q.append((-1) ** (k + 1) * num_q / math.factorial(2 * k + 1))
    return np.array(p), np.array(q)


_HANKEL_P, _HANKEL_Q = _hankel_coeffs()


def _j0_asymptotic(x):
    u = 1.0 / (8.0 * x)
    u2 = u * u
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for k in range(len(_HANKEL_P) - 1, -1, -1):
        p = p * u2 + _HANKEL_P[k]
        q = q * u2 + _HANKEL_Q[k]
    q = q * u
    c = x - 0.25 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(c) - q * np.sin(c))


def bessel_j0(x):
    """J0(x) for real x, accurate to ~1e-12 absolute up to x = 500.

    Accepts scalars or arrays; J0 is even, so the sign of x is irrelevant.
    """
    arr = np.abs(np.asarray(x, dtype=float))
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)

    small = arr <= _SERIES_CUT
    mid = (~small) & (arr < _INTEGRAL_CUT)
    large = arr >= _INTEGRAL_CUT
    if np.any(small):
        out[small] = _j0_series(arr[small])
    if np.any(mid):
        out[mid] = _j0_integral(arr[mid])
    if np.any(large):
        out[large] = _j0_asymptotic(arr[large])
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Parameters and elementary factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MemoryParams:
    """Dimensionless parameter set of one memory run.

    r        : detuning over twice the drive Rabi frequency (sign kept).
    chi_eff  : |chi| of the active drive; 1 for a plane wave.
    L_tilde  : cell length in units Omega / (2 g^2 N).
    T_W, T_R : write and read windows in units 1/Omega.
    epsilon2 : Omega^2 / (2 g^2 N); the stored-excitation weight in the
               continuity law (the scaled coherences carry 1/sqrt(2 eps^2)
               relative to the physical ones, so eps2 = 0.5 means the
               integrator's b, c amplitudes are the physical ones).
    """

    r: float
    L_tilde: float
    T_W: float
    T_R: float = None
    chi_eff: float = 1.0
    epsilon2: float = 0.5

    def __post_init__(self):
        if self.T_R is None:
            object.__setattr__(self, "T_R", self.T_W)
        if self.L_tilde <= 0 or self.T_W <= 0 or self.T_R <= 0:
            raise ValueError("L_tilde, T_W, T_R must all be positive")
        if not (0.0 < self.chi_eff <= 1.0 + 1e-9):
            raise ValueError(f"chi_eff must lie in (0, 1], got {self.chi_eff}")
        if self.epsilon2 <= 0:
            raise ValueError("epsilon2 must be positive")


@dataclass(frozen=True)
class AuxiliaryFactors:
    """mu, nu = 1 +- r/omega and omega = sqrt(r^2 + chi^2)."""

    mu: float
    nu: float
    omega_eff: float

    @classmethod
    def from_params(cls, r: float, chi_eff: float) -> "AuxiliaryFactors":
        omega = math.hypot(r, chi_eff)
        ratio = r / omega if omega > 0 else 0.0
        return cls(mu=1.0 + ratio, nu=1.0 - ratio, omega_eff=omega)


def f0_factor(z_tilde, t_tilde, r: float, chi_eff: float, support: float = None):
    """Elementary kernel factor exp(-i(omega+r)t) J0(sqrt(z t (1 + r/omega))).

    The Bessel radicand z*t*(1 + r/omega) is nonnegative whenever z, t >= 0
    because |r/omega| <= 1; this is asserted rather than clamped.  If
    ``support`` is given the factor vanishes outside 0 <= t <= support.
    """
    aux = AuxiliaryFactors.from_params(r, chi_eff)
    z = np.asarray(z_tilde, dtype=float)
    t = np.asarray(t_tilde, dtype=float)
    radicand = z * t * aux.mu
    assert np.all(radicand >= -1e-300), "negative Bessel radicand"
    out = np.exp(-1j * (aux.omega_eff + r) * t) * bessel_j0(np.sqrt(radicand))
    if support is not None:
        out = np.where((t >= 0) & (t <= support), out, 0.0)
    return out


def _fine_step(T: float, r: float) -> float:
    # Must resolve both the envelope and the 2r beat of f0 * conj(f0(-r)).
    return min(T / 256.0, 0.05, 0.025 / max(1.0, abs(r)))


def g_kernel_grid(z_tilde, t_grid, r: float, chi_eff: float) -> np.ndarray:
    """G(z_i, t_k) on a uniform time grid starting at 0, for each z in z_tilde.

    Discretized trapezoid convolution of f0(., r) with conj(f0(., -r)),
    evaluated for all time lags at once via FFT along the time axis.  The
    grid must be fine enough to resolve the 2r beat between the two factors.
    """
    t = np.asarray(t_grid, dtype=float)
    z = np.atleast_1d(np.asarray(z_tilde, dtype=float))
    if t.size < 2:
        return np.zeros((z.size, t.size), dtype=complex)
    h = t[1] - t[0]
    T = t[-1]
    if h > T / 64.0:
        raise StepSizeError(
            f"convolution step {h:.3g} exceeds T/64 = {T / 64:.3g}; "
            f"use at least {int(math.ceil(T / (T / 64))) + 1} time points"
        )
    aux = AuxiliaryFactors.from_params(r, chi_eff)
    Z = z[:, None]
    T2 = t[None, :]
    f1 = np.exp(-1j * (aux.omega_eff + r) * T2) * bessel_j0(
        np.sqrt(Z * T2 * aux.mu)
    )
    # conj of f0(., -r): omega is even in r, mu(-r) = nu(r).
    f2 = np.exp(-1j * (aux.omega_eff - r) * T2).conj() * bessel_j0(
        np.sqrt(Z * T2 * aux.nu)
    )
    full = fftconvolve(f1, f2, axes=1)[:, : t.size]
    endpoint = 0.5 * (f1 * f2[:, 0:1] + f1[:, 0:1] * f2)
    out = h * (full - endpoint)
    out[:, 0] = 0.0   # zero-length convolution interval, exactly
    return out


def g_kernel(z_tilde: float, t_tilde: float, params: MemoryParams,
             step: float = None) -> complex:
    """Single-point G(z, t); convenience wrapper around g_kernel_grid."""
    if t_tilde <= 0:
        return 0j
    h = step if step is not None else _fine_step(t_tilde, params.r)
    n = max(65, int(math.ceil(t_tilde / h)) + 1)
    t = np.linspace(0.0, t_tilde, n)
    return complex(g_kernel_grid([z_tilde], t, params.r, params.chi_eff)[0, -1])


def g_kernel_raman_limit(z_tilde, t_grid, r: float) -> np.ndarray:
    """Large-detuning form [1 * f] = int_0^t f(z, t', r) dt' of the kernel.

    In the r >> chi limit the second convolution factor tends to 1
    (its Bessel argument carries nu -> 0) while the first tends to
    f(z, t, r) = exp(-2 i r t) J0(sqrt(2 z t)), with mu -> 2 independently
    of chi; the running trapezoid integral replaces the full convolution.
    """
    t = np.asarray(t_grid, dtype=float)
    z = np.atleast_1d(np.asarray(z_tilde, dtype=float))
    if t.size < 2:
        return np.zeros((z.size, t.size), dtype=complex)
    h = t[1] - t[0]
    f = np.exp(-2j * r * t)[None, :] * bessel_j0(
        np.sqrt(2.0 * z[:, None] * t[None, :])
    )
    csum = np.cumsum(f, axis=1)
    out = h * (csum - 0.5 * (f + f[:, 0:1]))
    out[:, 0] = 0.0
    return out


# ---------------------------------------------------------------------------
# Discretized kernels and the full memory cycle
# ---------------------------------------------------------------------------


@dataclass
class KernelGrid:
    """A complex kernel sampled on two uniform axes, with trapezoid weights.

    axis1/axis2 are (z~, t~) for single-stage kernels or (t~, t~') for the
    full-cycle kernel; values[i, j] = kernel(axis1[i], axis2[j]).
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis1 = np.asarray(self.axis1, dtype=float)
        self.axis2 = np.asarray(self.axis2, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.axis1.size, self.axis2.size):
            raise ValueError(
                f"kernel shape {self.values.shape} does not match axes "
                f"({self.axis1.size}, {self.axis2.size})"
            )

    @staticmethod
    def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
        axis = np.asarray(axis, dtype=float)
        if axis.size < 2:
            return np.ones_like(axis)
        w = np.full(axis.size, axis[1] - axis[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def weights1(self) -> np.ndarray:
        return self.trapezoid_weights(self.axis1)

    @property
    def weights2(self) -> np.ndarray:
        return self.trapezoid_weights(self.axis2)

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Integral transform: out(axis1) = int kernel(., s) samples(s) ds."""
        return self.values @ (self.weights2 * np.asarray(samples))

    def factored_values(self) -> np.ndarray:
        """Values with the rapid detuning phase exp(-2 i r t~) removed.

        Only meaningful for full-cycle kernels (axis1 is the output time);
        the factor removed is recorded in meta["rapid_phase"].
        """
        r = float(self.meta.get("r", 0.0))
        return np.exp(2j * r * self.axis1)[:, None] * self.values

    # -- serialization ------------------------------------------------------

    def save(self, path_base: str) -> None:
        """Write <base>.bin (row-major little-endian complex128) + <base>.json."""
        raw = np.ascontiguousarray(self.values.astype("<c16"))
        with open(path_base + ".bin", "wb") as fh:
            fh.write(raw.tobytes())
        sidecar = {
            "shape": list(self.values.shape),
            "dtype": "<c16",
            "order": "row-major",
            "axis1": self.axis1.tolist(),
            "axis2": self.axis2.tolist(),
            "meta": _jsonable(self.meta),
            "sha256": hashlib.sha256(raw.tobytes()).hexdigest(),
        }
        with open(path_base + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path_base: str) -> "KernelGrid":
        with open(path_base + ".json") as fh:
            sidecar = json.load(fh)
        with open(path_base + ".bin", "rb") as fh:
            raw = fh.read()
        if hashlib.sha256(raw).hexdigest() != sidecar["sha256"]:
            raise IOError(f"checksum mismatch loading {path_base}.bin")
        values = np.frombuffer(raw, dtype="<c16").reshape(sidecar["shape"])
        return cls(
            axis1=np.array(sidecar["axis1"]),
            axis2=np.array(sidecar["axis2"]),
            values=values.copy(),
            meta=sidecar.get("meta", {}),
        )

    def save_csv(self, path: str) -> None:
        """Plain-text dump for small grids: i, j, axis1, axis2, re, im."""
        with open(path, "w") as fh:
            fh.write("i,j,axis1,axis2,re,im\n")
            for i, x in enumerate(self.axis1):
                for j, y in enumerate(self.axis2):
                    v = self.values[i, j]
                    fh.write(
                        f"{i},{j},{x:.17g},{y:.17g},{v.real:.17g},{v.imag:.17g}\n"
                    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def full_cycle_kernel(params: MemoryParams, nt: int = 201, nz: int = 201,
                      chi_write: complex = 1.0, chi_read: complex = 1.0,
                      mode_labels: dict = None, fine_step: float = None) -> KernelGrid:
    """Full write-store-read kernel K(t~, t~') on an (nt x nt) output grid.

        a_out(t~) = int_0^{T_W} K(t~, t~') a_in(t~') dt~'
        K(t~, t~') = chi_R conj(chi_W) / 2
                     * int_0^{L~} G_W(z~, T_W - t~') G_R(L~ - z~, t~) dz~

    The write kernel uses |chi_write|, the read kernel |chi_read| (1 for
    plane waves, in which case K carries no mode-index dependence at all).
    Both G factors are evaluated on an internal fine time grid that the
    output grid subsamples, so the 2r beat is resolved regardless of nt.
    """
    if nt < 2 or nz < 2:
        raise ValueError("nt and nz must both be at least 2")
    z = np.linspace(0.0, params.L_tilde, nz)
    t_out = np.linspace(0.0, params.T_R, nt)
    tp_out = np.linspace(0.0, params.T_W, nt)

    h = fine_step if fine_step is not None else _fine_step(
        max(params.T_W, params.T_R), params.r
    )

    def fine_grid(T, n_out):
        sub = max(1, int(math.ceil((T / (n_out - 1)) / h)))
        return np.linspace(0.0, T, sub * (n_out - 1) + 1), sub

    tw_fine, sub_w = fine_grid(params.T_W, nt)
    tr_fine, sub_r = fine_grid(params.T_R, nt)

    g_write = g_kernel_grid(z, tw_fine, params.r, abs(chi_write))
    g_read = g_kernel_grid(params.L_tilde - z, tr_fine, params.r, abs(chi_read))

    # G_W(z, T_W - t'_j) for output t'_j: reverse then subsample.
    gw_rev = g_write[:, ::-1][:, ::sub_w]            # (nz, nt)
    gr_out = g_read[:, ::sub_r]                      # (nz, nt)
    wz = KernelGrid.trapezoid_weights(z)

    prefactor = 0.5 * complex(chi_read) * np.conj(complex(chi_write))
    values = prefactor * (gr_out.T * wz) @ gw_rev    # (nt_out, ntp_out)

    meta = {
        "r": params.r,
        "L_tilde": params.L_tilde,
        "T_W": params.T_W,
        "T_R": params.T_R,
        "chi_write": complex(chi_write),
        "chi_read": complex(chi_read),
        "fine_step": h,
        "rapid_phase": "exp(-2j*r*t)",
    }
    if mode_labels:
        meta.update(mode_labels)
    return KernelGrid(axis1=t_out, axis2=tp_out, values=values, meta=meta)


def write_stage_kernel(params: MemoryParams, nz: int = 201,
                       chi_write: complex = 1.0, nt_fine: int = None) -> tuple:
    """Return (z grid, fine t grid, G_W values) for the write stage.

    Exposed for the PDE cross-validation: b(z~, T_W) is
    -conj(chi_W) int_0^{T_W} a_in(t') G_W(z~, T_W - t') dt'.
    """
    z = np.linspace(0.0, params.L_tilde, nz)
    if nt_fine is None:
        h = _fine_step(params.T_W, params.r)
        nt_fine = int(math.ceil(params.T_W / h)) + 1
    t = np.linspace(0.0, params.T_W, nt_fine)
    return z, t, g_kernel_grid(z, t, params.r, abs(chi_write))
