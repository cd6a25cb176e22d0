"""Single-photon pulse shapes, their Fourier transforms, and overlaps.

Transforms use the kernel ``(1/sqrt(2 pi)) int exp(-i w t) xi(t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erfcinv

from .numerics import SQRT_2PI, Grid1D, _filon_end_weight, adaptive_quad

__all__ = [
    "PulseSpec",
    "Gaussian",
    "RisingExp",
    "Sampled",
    "TwoPhotonInput",
    "evaluate",
    "fourier",
    "overlap",
    "fourier_samples",
]


class PulseSpec:
    """Common interface of the pulse variants.

    Subclasses provide ``evaluate``, ``fourier``, ``support`` and the
    ``breakpoints`` where the pulse is discontinuous.
    """

    breakpoints: tuple[float, ...] = ()

    def evaluate(self, t):
        raise NotImplementedError

    def fourier(self, omega):
        raise NotImplementedError

    def support(self, eps: float = 1e-16) -> tuple[float, float]:
        """Interval outside of which at most ``eps`` of the energy lies."""
        raise NotImplementedError

    @property
    def rate(self) -> float:
        """Fastest inverse time scale of the pulse."""
        raise NotImplementedError

    def limit(self, t: float, side: str) -> complex:
        """One-sided limit at ``t``; equals ``evaluate`` away from break points."""
        return complex(self.evaluate(np.asarray(t)))


@dataclass(frozen=True)
class Gaussian(PulseSpec):
    """Gaussian pulse ``(Omega^2/2pi)^{1/4} exp(-Omega^2 (t - tau)^2 / 4)``.

    Parameters
    ----------
    omega : float
        Frequency bandwidth.
    tau : float
        Arrival time of the peak.
    """

    omega: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"Gaussian bandwidth must be positive, got {self.omega}")

    @property
    def amplitude(self) -> float:
        return (self.omega**2 / (2.0 * math.pi)) ** 0.25

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-(self.omega**2) * (t - self.tau) ** 2 / 4.0) + 0j

    def fourier(self, omega):
        w = np.asarray(omega, dtype=float)
        return (
            self.amplitude * math.sqrt(2.0) / self.omega
            * np.exp(-(w**2) / self.omega**2 - 1j * w * self.tau)
        )

    def support(self, eps: float = 1e-16) -> tuple[float, float]:
        # |xi|^2 is a normal density with standard deviation 1/omega.
        z = math.sqrt(2.0) * float(erfcinv(eps))
        return self.tau - z / self.omega, self.tau + z / self.omega

    @property
    def rate(self) -> float:
        return self.omega


@dataclass(frozen=True)
class RisingExp(PulseSpec):
    """Rising exponential ``-sqrt(gamma) exp(gamma t / 2)`` for ``t <= 0``, zero after.

    Its spectrum is a Lorentzian with full width at half maximum ``gamma``.
    The pulse value at ``t = 0`` is ``-sqrt(gamma)`` (the step is taken to be
    zero at the origin), so stored samples at 0 are left limits.
    """

    gamma: float

    breakpoints = (0.0,)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"rising-exponential width must be positive, got {self.gamma}")

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        inside = t <= 0.0
        out = np.zeros(t.shape, dtype=complex)
        out[inside] = -math.sqrt(self.gamma) * np.exp(self.gamma * t[inside] / 2.0)
        return out if out.ndim else out[()]

    def limit(self, t: float, side: str) -> complex:
        if t == 0.0:
            return -math.sqrt(self.gamma) + 0j if side == "left" else 0j
        return complex(self.evaluate(t))

    def fourier(self, omega):
        w = np.asarray(omega, dtype=float)
        return math.sqrt(self.gamma) / (1j * w - self.gamma / 2.0) / SQRT_2PI

    def support(self, eps: float = 1e-16) -> tuple[float, float]:
        return math.log(eps) / self.gamma, 0.0

    @property
    def rate(self) -> float:
        return self.gamma


def _linear_norm_sq(values: np.ndarray, step: float) -> float:
    """Exact squared L2 norm of the piecewise-linear interpolant."""
    a, b = values[:-1], values[1:]
    return float(step / 3.0 * np.sum(np.abs(a) ** 2 + np.real(a * np.conjugate(b)) + np.abs(b) ** 2))


@dataclass(frozen=True, eq=False)
class Sampled(PulseSpec):
    """Pulse given by samples on a uniform grid, linearly interpolated, zero outside.

    The interpolant must have unit norm to within 1e-9; use
    :meth:`from_samples` with ``normalize=True`` to rescale raw data.
    """

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise ValueError("sample count does not match the grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        norm = _linear_norm_sq(values, self.grid.step)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"sampled pulse has squared norm {norm:.12g}, expected 1")

    @classmethod
    def from_samples(cls, t: Sequence[float], values: Sequence[complex], *, normalize: bool = True) -> "Sampled":
        """Build from uniformly spaced times, optionally rescaling to unit norm."""
        t = np.asarray(t, dtype=float)
        grid = Grid1D.from_range(t[0], t[-1], t.size)
        if np.max(np.abs(grid.points - t)) > 1e-9 * max(1.0, np.max(np.abs(t))):
            raise ValueError("sample times must be uniformly spaced")
        values = np.asarray(values, dtype=complex)
        if normalize:
            norm = _linear_norm_sq(values, grid.step)
            if norm <= 0:
                raise ValueError("samples are identically zero")
            values = values / math.sqrt(norm)
        return cls(grid, values)

    @classmethod
    def from_pulse(cls, pulse: PulseSpec, grid: Grid1D, *, normalize: bool = True) -> "Sampled":
        return cls.from_samples(grid.points, pulse.evaluate(grid.points), normalize=normalize)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.grid.start, self.grid.stop)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        g = self.grid
        inside = (t >= g.start) & (t <= g.stop)
        re = np.interp(t, g.points, self.values.real)
        im = np.interp(t, g.points, self.values.imag)
        out = np.where(inside, re + 1j * im, 0j)
        return out if out.ndim else out[()]

    def limit(self, t: float, side: str) -> complex:
        g = self.grid
        if t == g.start and side == "left" or t == g.stop and side == "right":
            return 0j
        return complex(self.evaluate(t))

    def fourier(self, omega):
        return fourier_samples(self.values, self.grid, omega)

    def support(self, eps: float = 1e-16) -> tuple[float, float]:
        return self.grid.start, self.grid.stop

    @property
    def rate(self) -> float:
        return 1.0 / self.grid.step


def fourier_samples(values, grid: Grid1D, omega, *, jumps: dict[int, complex] | None = None):
    """Exact transform of the piecewise-linear interpolant of ``values``.

    Parameters
    ----------
    values : array_like
        Samples on ``grid``; the interpolant is zero outside the grid.
    omega : array_like
        Angular frequencies.
    jumps : dict, optional
        Maps node index to the right limit at that node; the stored sample is
        then the left limit, so a step discontinuity is represented exactly.
    """
    values = np.asarray(values, dtype=complex)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    t = grid.points
    theta = w * grid.step
    weight = np.sinc(theta / (2.0 * math.pi)) ** 2
    e_right = _filon_end_weight(theta)
    e_left = np.conjugate(e_right)
    out = np.empty(w.shape, dtype=complex)
    chunk = max(1, 2_000_000 // t.size)
    for s in range(0, w.size, chunk):
        ws = w[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(ws, t)) @ values
    out *= weight
    out += (e_right - weight) * values[0] * np.exp(-1j * w * t[0])
    out += (e_left - weight) * values[-1] * np.exp(-1j * w * t[-1])
    for m, right in (jumps or {}).items():
        phase = np.exp(-1j * w * t[m])
        out += (e_left - weight) * values[m] * phase + e_right * right * phase
    out *= grid.step / SQRT_2PI
    return out.reshape(np.shape(omega))


def evaluate(pulse: PulseSpec, t):
    """Pulse amplitude ``xi(t)``."""
    return pulse.evaluate(t)


def fourier(pulse: PulseSpec, omega):
    """Spectrum ``f[omega]``."""
    return pulse.fourier(omega)


def overlap(xi1: PulseSpec, xi2: PulseSpec, tol: float = 1e-13) -> complex:
    """Inner product ``<xi1|xi2> = int conj(xi1(t)) xi2(t) dt``."""
    lo1, hi1 = xi1.support()
    lo2, hi2 = xi2.support()
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if lo >= hi:
        return 0j
    points = sorted({p for p in (*xi1.breakpoints, *xi2.breakpoints) if lo < p < hi})
    for pulse in (xi1, xi2):
        if isinstance(pulse, Sampled):
            nodes = pulse.grid.points
            points = sorted(set(points) | set(nodes[(nodes > lo) & (nodes < hi)].tolist()))
    return adaptive_quad(
        lambda t: np.conjugate(xi1.evaluate(t)) * xi2.evaluate(t),
        lo, hi, tol, points=points, max_panels=100_000,
    )


@dataclass(frozen=True)
class TwoPhotonInput:
    """Two-photon input ``B^dag(xi1) B^dag(xi2)|0>`` and its normalization ``N2``."""

    xi1: PulseSpec
    xi2: PulseSpec
    n2: float = field(init=False)

    def __post_init__(self):
        if self.xi1 is self.xi2 or self.xi1 == self.xi2:
            n2 = 2.0
        else:
            n2 = 1.0 + abs(overlap(self.xi1, self.xi2)) ** 2
        object.__setattr__(self, "n2", float(min(max(n2, 1.0), 2.0)))

    @classmethod
    def fock(cls, pulse: PulseSpec) -> "TwoPhotonInput":
        """Two photons in the same mode."""
        return cls(pulse, pulse)

    @property
    def is_fock(self) -> bool:
        return self.xi1 is self.xi2 or self.xi1 == self.xi2

    @property
    def pulses(self) -> tuple[PulseSpec, PulseSpec]:
        return (self.xi1, self.xi2)
