"""Linear response of the emitter: transfer functions and pulse convolutions.

The one-channel impulse response is ``delta(t) - kappa exp(-(kappa/2 + i w_d) t)``
for ``t >= 0``.  The delta part is never discretized; a convolution is the
pulse itself plus an exponentially weighted running integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridTooShort
from .numerics import (
    Grid1D,
    MeshCumulative,
    SegmentedMesh,
    ToleranceProfile,
    adaptive_quad,
    get_profile,
)
from .pulse_shapes import PulseSpec, Sampled

__all__ = [
    "EmitterParams",
    "TwoChannelParams",
    "transfer_scalar",
    "transfer_matrix",
    "convolve_scalar",
    "convolve_matrix",
    "ScatteredPulse",
    "build_mesh",
    "default_time_axis",
    "check_grid",
    "absorbed_energy",
]


@dataclass(frozen=True)
class EmitterParams:
    """Two-level emitter coupled to one channel.

    Parameters
    ----------
    kappa : float
        Coupling (decay) rate, > 0.
    omega_d : float
        Detuning between carrier and transition frequency.
    """

    kappa: float
    omega_d: float = 0.0

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not math.isfinite(self.omega_d):
            raise ValueError("omega_d must be finite")

    @property
    def rate(self) -> complex:
        """Complex decay rate ``kappa/2 + i omega_d`` of the excited state."""
        return complex(self.kappa / 2.0, self.omega_d)

    @property
    def decay(self) -> float:
        return self.kappa


@dataclass(frozen=True)
class TwoChannelParams:
    """Emitter coupled to two counter-propagating channels, without detuning."""

    kappa1: float
    kappa2: float

    def __post_init__(self):
        for name in ("kappa1", "kappa2"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")

    @classmethod
    def equal(cls, kappa: float) -> "TwoChannelParams":
        return cls(kappa, kappa)

    @property
    def total(self) -> float:
        return self.kappa1 + self.kappa2

    @property
    def is_equal(self) -> bool:
        return self.kappa1 == self.kappa2

    @property
    def rate(self) -> float:
        return self.total / 2.0

    @property
    def decay(self) -> float:
        return self.total

    def kappa(self, i: int) -> float:
        if i == 1:
            return self.kappa1
        if i == 2:
            return self.kappa2
        raise ValueError(f"channel index must be 1 or 2, got {i}")


def transfer_scalar(params: EmitterParams, omega):
    """``G[i omega] = (i omega + i w_d - kappa/2) / (i omega + i w_d + kappa/2)``."""
    s = 1j * (np.asarray(omega, dtype=float) + params.omega_d)
    return (s - params.kappa / 2.0) / (s + params.kappa / 2.0)


def transfer_matrix(params: TwoChannelParams, omega) -> np.ndarray:
    """2x2 transfer matrix at each frequency; shape ``omega.shape + (2, 2)``."""
    s = 1j * np.asarray(omega, dtype=float)
    k1, k2 = params.kappa1, params.kappa2
    denom = s + (k1 + k2) / 2.0
    out = np.empty(s.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = (s - (k1 - k2) / 2.0) / denom
    out[..., 1, 1] = (s + (k1 - k2) / 2.0) / denom
    out[..., 0, 1] = out[..., 1, 0] = -math.sqrt(k1 * k2) / denom
    return out


# ---------------------------------------------------------------------------
# Internal meshes
# ---------------------------------------------------------------------------


# Pulse energy left outside the internal meshes and oracle integration ranges.
MESH_ENERGY_EPS = 1e-20


def _pulse_step(pulse: PulseSpec, resolution: float) -> float:
    if isinstance(pulse, Sampled):
        # Resolve the linear interpolant; its kinks cap the order anyway.
        return pulse.grid.step / 4.0
    return resolution / pulse.rate


def build_mesh(
    pulses: Sequence[PulseSpec],
    rate: complex,
    profile: str | ToleranceProfile = "tight",
) -> SegmentedMesh:
    """Mesh covering the pulses and the emitter's re-emission tail.

    The pulse region is split at every pulse break point and resolved on the
    fastest time scale of the problem.  A trailing segment of 40 decay times
    ``1/Re(2 rate)`` carries the free decay, where only the emitter time scales
    matter.
    """
    prof = get_profile(profile)
    rate = complex(rate)
    decay = 2.0 * rate.real
    emitter_speed = max(decay, abs(rate.imag))
    lo = min(p.support(MESH_ENERGY_EPS)[0] for p in pulses)
    hi = max(p.support(MESH_ENERGY_EPS)[1] for p in pulses)
    step = min([prof.resolution / emitter_speed] + [_pulse_step(p, prof.resolution) for p in pulses])
    breaks = sorted({b for p in pulses for b in p.breakpoints if lo < b < hi})
    edges = [lo, *breaks, hi]
    steps = [step] * (len(edges) - 1)
    tail = 40.0 / decay
    edges.append(hi + tail)
    steps.append(prof.resolution / emitter_speed)
    return SegmentedMesh(edges, steps)


def sample_pulse(mesh: SegmentedMesh, pulse: PulseSpec) -> np.ndarray:
    """Pulse values on the mesh with one-sided limits at the joints."""
    return mesh.sample(pulse.evaluate, pulse.limit)


class ScatteredPulse:
    """Evaluator of ``direct * xi(t) + smooth * int_{-inf}^t exp(-rate (t - r)) xi(r) dr``.

    This is the convolution of a pulse with an impulse response of the form
    ``direct * delta(t) + smooth * exp(-rate t) u(t)``.
    """

    def __init__(self, pulse: PulseSpec, mesh: SegmentedMesh, rate: complex, direct: float, smooth: complex,
                 cumulative: MeshCumulative | None = None, pulse_values: np.ndarray | None = None):
        self.pulse = pulse
        self.mesh = mesh
        self.direct = direct
        self.smooth = smooth
        self.pulse_values = sample_pulse(mesh, pulse) if pulse_values is None else pulse_values
        self.cumulative = cumulative or MeshCumulative(mesh, rate, self.pulse_values)

    @property
    def on_mesh(self) -> np.ndarray:
        return self.direct * self.pulse_values + self.smooth * self.cumulative.nodes

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = self.smooth * self.cumulative(t)
        if self.direct:
            out = out + self.direct * self.pulse.evaluate(t)
        return out


# ---------------------------------------------------------------------------
# Grid sanity
# ---------------------------------------------------------------------------


def _l1_norm_sq(pulse: PulseSpec) -> float:
    lo, hi = pulse.support()
    pts = [b for b in pulse.breakpoints if lo < b < hi]
    return abs(adaptive_quad(lambda t: np.abs(pulse.evaluate(t)), lo, hi, 1e-8, points=pts)) ** 2


def reemission_tail(pulses: Sequence[PulseSpec], decay: float, energy_tol: float = 1e-6) -> float:
    """Length after the pulses beyond which the re-emitted energy is below ``energy_tol``.

    The emitter amplitude after the pulses is bounded by ``int |xi|``, so the
    energy still to be emitted after a further time ``T`` is at most
    ``decay * (int |xi|)^2 * exp(-decay T)``.
    """
    bound = decay * max(_l1_norm_sq(p) for p in pulses)
    if bound <= energy_tol:
        return 0.0
    return math.log(bound / energy_tol) / decay


def check_grid(axis: Grid1D, pulses: Sequence[PulseSpec], decay: float, energy_tol: float = 1e-5) -> None:
    """Raise :class:`GridTooShort` when ``axis`` misses pulse energy or re-emission.

    A grid fails when it starts after, or ends before, the interval holding all
    but ``energy_tol`` of the pulse energy, or when its tail past the pulses is
    shorter than four decay times while the energy re-emitted beyond the grid
    could exceed ``energy_tol``.
    """
    lo = min(p.support(energy_tol)[0] for p in pulses)
    hi = max(p.support(energy_tol)[1] for p in pulses)
    if axis.start > lo + 1e-12 * max(1.0, abs(lo)):
        raise GridTooShort(f"grid starts at {axis.start:g} but the pulses start near {lo:g}")
    tail = axis.stop - hi
    if tail < 4.0 / decay and tail < reemission_tail(pulses, decay, energy_tol):
        raise GridTooShort(
            f"grid tail {tail:g} after the pulses is shorter than the re-emission time "
            f"{min(4.0 / decay, reemission_tail(pulses, decay, energy_tol)):g}"
        )


def default_time_axis(
    pulses: Sequence[PulseSpec], decay: float, count: int = 512, energy_tol: float = 1e-6
) -> Grid1D:
    """Uniform time axis covering the pulses and the re-emission tail.

    The window holds all but ``energy_tol`` of each pulse's energy and extends
    by :func:`reemission_tail` on the late side.  When the pulses have a break
    point it is placed exactly on a node.
    """
    lo = min(p.support(energy_tol)[0] for p in pulses)
    hi = max(p.support(energy_tol)[1] for p in pulses) + reemission_tail(pulses, decay, energy_tol)
    breaks = sorted({b for p in pulses for b in p.breakpoints if lo <= b <= hi})
    if not breaks:
        return Grid1D.from_range(lo, hi, count)
    step = (hi - lo) / (count - 2)
    anchor = breaks[0]
    start = anchor - math.ceil((anchor - lo) / step - 1e-9) * step
    return Grid1D(start, step, count)


# ---------------------------------------------------------------------------
# Public convolutions
# ---------------------------------------------------------------------------


def scalar_response(params: EmitterParams, pulse: PulseSpec, profile="tight", mesh=None) -> ScatteredPulse:
    """Evaluator of ``nu = g * xi`` for the one-channel emitter."""
    mesh = mesh or build_mesh([pulse], params.rate, profile)
    return ScatteredPulse(pulse, mesh, params.rate, 1.0, -params.kappa)


def matrix_response(params: TwoChannelParams, i: int, j: int, pulse: PulseSpec, profile="tight",
                    mesh=None, base: ScatteredPulse | None = None) -> ScatteredPulse:
    """Evaluator of ``g_ij * xi`` for the two-channel emitter.

    ``base`` may carry a previously computed running integral of the same
    pulse on the same mesh, which is then shared.
    """
    mesh = mesh or (base.mesh if base else build_mesh([pulse], params.rate, profile))
    smooth = -math.sqrt(params.kappa(i) * params.kappa(j))
    direct = 1.0 if i == j else 0.0
    if base is not None:
        return ScatteredPulse(pulse, mesh, params.rate, direct, smooth, base.cumulative, base.pulse_values)
    return ScatteredPulse(pulse, mesh, params.rate, direct, smooth)


def convolve_scalar(params: EmitterParams, pulse: PulseSpec, grid: Grid1D, profile="tight") -> np.ndarray:
    """Samples of the scattered single-photon envelope ``nu = g * xi`` on ``grid``.

    Raises
    ------
    GridTooShort
        If the grid misses part of the pulse or the re-emission tail.
    """
    check_grid(grid, [pulse], params.decay)
    return scalar_response(params, pulse, profile)(grid.points)


def convolve_matrix(params: TwoChannelParams, i: int, j: int, pulse: PulseSpec, grid: Grid1D,
                    profile="tight") -> np.ndarray:
    """Samples of ``g_ij * xi`` on ``grid`` (input channel ``j``, output channel ``i``)."""
    check_grid(grid, [pulse], params.decay)
    return matrix_response(params, i, j, pulse, profile)(grid.points)


def absorbed_energy(params: EmitterParams, pulse: PulseSpec, until: float, profile="tight") -> float:
    """``int_{-inf}^{until} (|xi|^2 - |nu|^2) dt``: energy held by the emitter at time ``until``."""
    response = scalar_response(params, pulse, profile)
    lo = response.mesh.start
    if until <= lo:
        return 0.0
    pts = [b for b in pulse.breakpoints if lo < b < until]
    value = adaptive_quad(
        lambda t: np.abs(pulse.evaluate(t)) ** 2 - np.abs(response(t)) ** 2,
        lo, until, get_profile(profile).quad_tol, points=pts, max_panels=50_000,
    )
    return float(np.real(value))
