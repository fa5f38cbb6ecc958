"""Direct integrator of the coupled field-coherence equations.

This module is the independent oracle for the closed-form kernels: it
marches the dimensionless system

    da/dz~ = -c/2,
    dc/dt~ = -2 i r c + a + chi b,
    db/dt~ = -conj(chi) c,

explicitly in time (the a equation has no time derivative — the field is
slaved to the optical coherence and recovered by a cumulative z~ integral
at every stage of every step).  The detuning term -2 i r c is kept in full,
with no adiabatic elimination, precisely so the integrator shares no
approximations with the kernel derivation.

Scaling: t~ = Omega t, z~ = (2 g^2 N / Omega) z.  The stored arrays b and c
are the atomic coherences in units where the continuity law reads

    d|a|^2/dz~ + eps2 * d(|b|^2 + |c|^2)/dt~ = 0,  eps2 = 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .kernels import MemoryParams, StepSizeError

__all__ = [
    "FieldState",
    "PulseProfile",
    "SimGrids",
    "Stage",
    "StageError",
    "apply_storage",
    "evolve_read",
    "evolve_write",
    "gaussian_pulse",
]


class StageError(RuntimeError):
    """Raised when a stage transition is requested out of order."""


class Stage(Enum):
    WRITE = "write"
    STORE = "store"
    READ = "read"


@dataclass(frozen=True)
class SimGrids:
    """Discretization of one stage: nz space points, nt recorded time points,
    each recorded step split into ``substeps`` integration sub-steps."""

    nz: int = 200
    nt: int = 201
    substeps: int = 10

    def __post_init__(self):
        if self.nz < 2 or self.nt < 2 or self.substeps < 1:
            raise ValueError("grids need nz >= 2, nt >= 2, substeps >= 1")

    def time_step(self, T: float) -> float:
        return T / ((self.nt - 1) * self.substeps)


@dataclass
class PulseProfile:
    """Input or output signal envelope a(t~) at a cell face."""

    times: np.ndarray
    samples: np.ndarray
    oam: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.times.shape != self.samples.shape:
            raise ValueError("pulse times and samples must have equal shape")

    @property
    def norm(self) -> float:
        """Time-integrated squared modulus (dimensionless flux)."""
        return float(np.trapezoid(np.abs(self.samples) ** 2, self.times))

    def interpolator(self):
        t0, t1 = self.times[0], self.times[-1]
        tr = np.ascontiguousarray(self.times)
        re = np.ascontiguousarray(self.samples.real)
        im = np.ascontiguousarray(self.samples.imag)

        def f(t):
            if t < t0 or t > t1:
                return 0j
            return complex(np.interp(t, tr, re), np.interp(t, tr, im))

        return f


def gaussian_pulse(T: float, nt: int, *, width_fraction: float = 1.0 / 6.0,
                   oam: int = 0) -> PulseProfile:
    """Smooth centered envelope exp(-(t - T/2)^2 / (wT)^2) on [0, T]."""
    t = np.linspace(0.0, T, nt)
    w = width_fraction * T
    return PulseProfile(t, np.exp(-((t - T / 2.0) ** 2) / w**2), oam=oam)


@dataclass
class FieldState:
    """Snapshot history of one stage on the (recorded time) x (z~) grid.

    a, b, c have shape (nt_recorded, nz); row k is the state at
    ``times[k]``.  ``oam`` is the signal OAM label, ``coherence_oam`` the
    OAM carried by the stored spin coherence (l - J after a write with
    drive OAM J).
    """

    z: np.ndarray
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    stage: Stage
    oam: int = 0
    coherence_oam: int = 0
    params: MemoryParams = None
    meta: dict = field(default_factory=dict)


def _check_step(h: float, params: MemoryParams, chi: complex) -> None:
    scale = max(abs(params.r), abs(chi), 1.0)
    if h * scale > 0.1:
        raise StepSizeError(
            f"time step {h:.3g} too coarse for max(|r|, chi, 1) = {scale:.3g}; "
            f"need step <= {0.1 / scale:.3g} (increase nt or substeps)"
        )


def _slaved_field(gamma: np.ndarray, a_in: complex, hz: float) -> np.ndarray:
    """a(z~) = a_in - (1/2) int_0^z~ c dz' by a running trapezoid sum."""
    csum = np.cumsum(gamma)
    return a_in - 0.5 * hz * (csum - 0.5 * (gamma + gamma[0]))


def _march(a_of_t, chi: complex, T: float, grids: SimGrids,
           params: MemoryParams, b0: np.ndarray):
    """Explicit-midpoint march of (b, c) over [0, T] with a slaved.

    Returns recorded (times, a, b, c) histories including t = 0.
    """
    nz = grids.nz
    z = np.linspace(0.0, params.L_tilde, nz)
    hz = z[1] - z[0]
    h = grids.time_step(T)
    _check_step(h, params, chi)

    b = np.asarray(b0, dtype=complex).copy()
    c = np.zeros(nz, dtype=complex)
    chi_c = np.conj(chi)

    times = np.linspace(0.0, T, grids.nt)
    a_hist = np.empty((grids.nt, nz), dtype=complex)
    b_hist = np.empty((grids.nt, nz), dtype=complex)
    c_hist = np.empty((grids.nt, nz), dtype=complex)

    def derivs(t, b_cur, c_cur):
        a_cur = _slaved_field(c_cur, a_of_t(t), hz)
        dc = -2j * params.r * c_cur + a_cur + chi * b_cur
        db = -chi_c * c_cur
        return db, dc

    a_hist[0] = _slaved_field(c, a_of_t(0.0), hz)
    b_hist[0] = b
    c_hist[0] = c
    t = 0.0
    for k in range(1, grids.nt):
        for _ in range(grids.substeps):
            db1, dc1 = derivs(t, b, c)
            db2, dc2 = derivs(t + 0.5 * h, b + 0.5 * h * db1, c + 0.5 * h * dc1)
            b = b + h * db2
            c = c + h * dc2
            t += h
        t = times[k]   # avoid accumulated roundoff in the clock
        a_hist[k] = _slaved_field(c, a_of_t(t), hz)
        b_hist[k] = b
        c_hist[k] = c
    return z, times, a_hist, b_hist, c_hist


def evolve_write(pulse: PulseProfile, l: int, J, chi_tilde: complex,
                 params: MemoryParams, grids: SimGrids = SimGrids()) -> FieldState:
    """Write stage: map the input pulse onto the spin coherence.

    ``J`` is the write-drive OAM (None for a plane wave, in which case
    chi_tilde must be 1).  The input pulse enters at z~ = 0 over [0, T_W];
    atoms start unexcited (b = c = 0).
    """
    if J is None and abs(chi_tilde - 1.0) > 1e-12:
        raise ValueError("a plane-wave drive requires chi_tilde = 1")
    a_of_t = pulse.interpolator()
    z, times, a, b, c = _march(a_of_t, chi_tilde, params.T_W, grids, params,
                               np.zeros(grids.nz, dtype=complex))
    return FieldState(
        z=z, times=times, a=a, b=b, c=c, stage=Stage.WRITE,
        oam=l, coherence_oam=l - (0 if J is None else int(J)),
        params=params, meta={"chi_write": complex(chi_tilde), "J": J},
    )


def apply_storage(state: FieldState) -> FieldState:
    """Storage interval: spin coherence kept losslessly, optical coherence
    and field decayed to zero.  Idempotent."""
    if state.stage not in (Stage.WRITE, Stage.STORE):
        raise StageError(f"cannot apply storage after stage {state.stage}")
    b_final = state.b[-1].copy()
    zeros = np.zeros((1, state.z.size), dtype=complex)
    return FieldState(
        z=state.z, times=np.array([0.0]),
        a=zeros.copy(), b=b_final[None, :], c=zeros.copy(),
        stage=Stage.STORE, oam=state.oam, coherence_oam=state.coherence_oam,
        params=state.params, meta=dict(state.meta),
    )


def evolve_read(state: FieldState, I, chi_tilde_read: complex,
                params: MemoryParams = None,
                grids: SimGrids = SimGrids()) -> tuple:
    """Read stage: convert the stored coherence back into a field.

    No input field enters during readout; the output pulse is a(L~, t~)
    over [0, T_R].  ``I`` is the read-drive OAM (None for a plane wave);
    the output OAM label is the stored coherence OAM plus I.

    Returns (output PulseProfile, final FieldState).
    """
    if state.stage is not Stage.STORE:
        raise StageError("evolve_read requires a stored state (apply_storage)")
    if I is None and abs(chi_tilde_read - 1.0) > 1e-12:
        raise ValueError("a plane-wave drive requires chi_tilde = 1")
    params = params if params is not None else state.params
    z, times, a, b, c = _march(lambda t: 0j, chi_tilde_read, params.T_R,
                               grids, params, state.b[0])
    oam_out = state.coherence_oam + (0 if I is None else int(I))
    final = FieldState(
        z=z, times=times, a=a, b=b, c=c, stage=Stage.READ,
        oam=oam_out, coherence_oam=state.coherence_oam, params=params,
        meta={**state.meta, "chi_read": complex(chi_tilde_read), "I": I},
    )
    return PulseProfile(times, a[:, -1].copy(), oam=oam_out), final


def continuity_residual(state: FieldState) -> np.ndarray:
    """Discrete residual of the excitation-continuity law on a write history.

    The law d|a|^2/dz~ + eps2 d(|b|^2+|c|^2)/dt~ = 0 holds exactly for the
    continuous system with eps2 = 1/2; here the z~ derivative is evaluated
    analytically through the slaving relation (d|a|^2/dz~ = -Re(conj(a) c))
    and the time derivative by centered differences on the recorded history,
    so the residual is purely the O(dt^2) time-discretization error.
    """
    dt = state.times[1] - state.times[0]
    e = state.params.epsilon2
    excitation = np.abs(state.b) ** 2 + np.abs(state.c) ** 2
    d_dt = (excitation[2:] - excitation[:-2]) / (2.0 * dt)
    flux = -np.real(np.conj(state.a) * state.c)[1:-1]
    return flux + e * d_dt


def snapshot_csv(state: FieldState, path: str, index: int = -1) -> None:
    """Dump one recorded time slice as CSV (z, re/im of b and c)."""
    with open(path, "w") as fh:
        fh.write("z,re_b,im_b,re_c,im_c\n")
        for zk, bk, ck in zip(state.z, state.b[index], state.c[index]):
            fh.write(
                f"{zk:.17g},{bk.real:.17g},{bk.imag:.17g},"
                f"{ck.real:.17g},{ck.imag:.17g}\n"
            )
