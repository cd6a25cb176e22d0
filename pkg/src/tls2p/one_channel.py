"""Two photons scattering off a two-level emitter in a single channel.

The output two-photon amplitude in time is

    eta(p1, p2) = nu1(p1) nu2(p2) + nu1(p2) nu2(p1) + n(p1, p2),

where ``nu_j = g * xi_j`` is the linearly scattered pulse and the emitter
induced part is

    n(p1, p2) = -4 kappa exp(-a |p1 - p2|) C(min(p1, p2)),
    C(t) = int_{-inf}^t exp(-2a (t - r)) h(r) dr,
    h = xi1 xi2 - (xi1 nu2 + nu1 xi2) / 2,

with ``a = kappa/2 + i omega_d``.  The frequency-domain amplitude adds a
four-wave-mixing integral to the linear term; the two forms are Fourier
pairs and ``lemma_oracle`` re-derives the time-domain value by brute-force
nested quadrature.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ScaleMismatch
from .lti_response import (
    MESH_ENERGY_EPS,
    EmitterParams,
    ScatteredPulse,
    build_mesh,
    check_grid,
    default_time_axis,
    sample_pulse,
    transfer_scalar,
)
from .numerics import (
    Grid1D,
    Grid2D,
    MeshCumulative,
    adaptive_quad,
    get_profile,
    grid_integral,
    quad_batch,
    separable_kernel_norm,
)
from .pulse_shapes import PulseSpec, TwoPhotonInput

__all__ = [
    "TwoPhotonAmplitude",
    "OneChannelScattering",
    "zeta",
    "nonlinear_term",
    "eta_time",
    "eta_freq",
    "mixing_kernel",
    "lemma_oracle",
    "time_density",
    "default_grid",
]


@dataclass(frozen=True, eq=False)
class TwoPhotonAmplitude:
    """Two-photon amplitude sampled on a 2D grid.

    Attributes
    ----------
    grid : Grid2D
    values : ndarray
        Complex samples, rows follow ``grid.axis1``.
    domain : {"time", "frequency"}
    n2 : float
        Normalization of the input state; the amplitude integrates to ``2 n2``.
    breakpoints : tuple of float
        Lines ``p = b`` across which the field jumps (time domain only).
        Samples on such a line are left limits.
    norm_sq : float or None
        Plane integral of ``|values|^2`` evaluated by the producer without
        sampling error, when available.
    diagonal_kink : bool
        The field has a crease along ``p1 = p2``; :func:`~tls2p.numerics.fourier2d`
        then interpolates the diagonal cells on triangles.
    """

    grid: Grid2D
    values: np.ndarray
    domain: str
    n2: float
    breakpoints: tuple[float, ...] = ()
    norm_sq: float | None = None
    diagonal_kink: bool = False

    def __post_init__(self):
        if self.domain not in ("time", "frequency"):
            raise ValueError(f"domain must be 'time' or 'frequency', got {self.domain!r}")
        if np.shape(self.values) != self.grid.shape:
            raise ValueError("values do not match the grid shape")

    def grid_norm_sq(self) -> float:
        """Plane integral of ``|values|^2`` by the jump-aware trapezoid rule."""
        return grid_integral(np.abs(self.values) ** 2, self.grid, self.breakpoints).real

    def symmetry_error(self) -> float:
        """Largest ``|values(a, b) - values(b, a)|``."""
        if not self.grid.is_square:
            raise ValueError("exchange symmetry needs identical axes")
        return float(np.max(np.abs(self.values - self.values.T)))


# ---------------------------------------------------------------------------
# Closed-form solver
# ---------------------------------------------------------------------------


class OneChannelScattering:
    """Precomputed one-dimensional ingredients of the output amplitude.

    Construction costs O(mesh size); afterwards the amplitude can be
    evaluated anywhere, sampled on any grid, and its norm computed without
    a 2D quadrature.

    Parameters
    ----------
    params : EmitterParams
    inp : TwoPhotonInput
    profile : {"tight", "figure"}
        Internal mesh resolution.
    """

    def __init__(self, params: EmitterParams, inp: TwoPhotonInput, profile="tight"):
        self.params = params
        self.inp = inp
        self.profile = get_profile(profile)
        a = params.rate
        self.mesh = mesh = build_mesh(inp.pulses, a, self.profile)
        kappa = params.kappa
        self.nu1 = ScatteredPulse(inp.xi1, mesh, a, 1.0, -kappa)
        if inp.is_fock:
            self.nu2 = self.nu1
        else:
            self.nu2 = ScatteredPulse(inp.xi2, mesh, a, 1.0, -kappa)
        x1, x2 = self.nu1.pulse_values, self.nu2.pulse_values
        n1, n2 = self.nu1.on_mesh, self.nu2.on_mesh
        h = x1 * x2 - 0.5 * (x1 * n2 + n1 * x2)
        self.memory = MeshCumulative(mesh, 2.0 * a, h)
        self.breakpoints = tuple(sorted({b for p in inp.pulses for b in p.breakpoints}))

    @property
    def rate(self) -> complex:
        return self.params.rate

    def nu(self, j: int, t) -> np.ndarray:
        """Linearly scattered envelope of photon ``j`` (1 or 2)."""
        return (self.nu1 if j == 1 else self.nu2)(t)

    def nonlinear(self, p1, p2) -> np.ndarray:
        """Emitter-induced part ``n(p1, p2)`` of the amplitude."""
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        mem = self.memory(np.minimum(p1, p2))
        return -4.0 * self.params.kappa * np.exp(-self.rate * np.abs(p1 - p2)) * mem

    def eta(self, p1, p2) -> np.ndarray:
        """Output amplitude at arbitrary points."""
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        lin = self.nu1(p1) * self.nu2(p2) + self.nu1(p2) * self.nu2(p1)
        return lin + self.nonlinear(p1, p2)

    def zeta(self, p1: float, p2: float) -> complex:
        """Time-ordered re-absorption term (zero unless ``p1 > p2``).

        ``2 kappa exp(-kappa (p1 - p2)/2 - i w_d (p1 + p2)) int_{p2}^{p1} exp(2 i w_d r) h(r) dr``.

        This is one piece of the emitter-induced part only.  ``zeta(p1, p2) +
        zeta(p2, p1)`` misses the contribution of photons re-emitted before
        ``min(p1, p2)``, which :meth:`nonlinear` includes.
        """
        if not p1 > p2:
            return 0j
        kappa, wd = self.params.kappa, self.params.omega_d
        xi1, xi2 = self.inp.xi1, self.inp.xi2

        def integrand(r):
            x1, x2 = xi1.evaluate(r), xi2.evaluate(r)
            h = x1 * x2 - 0.5 * (x1 * self.nu2(r) + self.nu1(r) * x2)
            return np.exp(2j * wd * r) * h

        lo = max(p2, self.mesh.start)
        if lo >= p1:
            return 0j
        pts = [b for b in self.breakpoints if lo < b < p1]
        integral = adaptive_quad(integrand, lo, p1, self.profile.quad_tol, points=pts, max_panels=50_000)
        return 2.0 * kappa * np.exp(-kappa * (p1 - p2) / 2.0 - 1j * wd * (p1 + p2)) * integral

    def norm_sq(self) -> float:
        """Plane integral of ``|eta|^2`` (equals ``2 N2`` when unitary)."""
        mesh = self.mesh
        n1, n2 = self.nu1.on_mesh, self.nu2.on_mesh
        return separable_kernel_norm(mesh, [n1, n2], [n2, n1], -4.0 * self.params.kappa, self.rate,
                                     self.memory.nodes)

    def sample(self, grid: Grid2D) -> np.ndarray:
        """Amplitude on a grid; exactly exchange-symmetric when the axes coincide."""
        if grid.is_square:
            t = grid.axis1.points
            v1, v2 = self.nu1(t), self.nu2(t)
            lin = np.outer(v1, v2)
            mem = self.memory(t)
            idx = np.minimum.outer(np.arange(t.size), np.arange(t.size))
            gap = np.abs(np.subtract.outer(t, t))
            nl = -4.0 * self.params.kappa * np.exp(-self.rate * gap) * mem[idx]
            return lin + lin.T + nl
        p1, p2 = grid.mesh()
        return self.eta(p1, p2)

    def amplitude(self, grid: Grid2D, *, with_norm: bool = True) -> TwoPhotonAmplitude:
        return TwoPhotonAmplitude(
            grid=grid,
            values=self.sample(grid),
            domain="time",
            n2=self.inp.n2,
            breakpoints=self.breakpoints,
            norm_sq=self.norm_sq() if with_norm else None,
            diagonal_kink=True,
        )


@functools.lru_cache(maxsize=8)
def _solver(params: EmitterParams, inp: TwoPhotonInput, profile: str) -> OneChannelScattering:
    return OneChannelScattering(params, inp, profile)


def default_grid(params: EmitterParams, inp: TwoPhotonInput, count: int = 512) -> Grid2D:
    """Square time grid covering the pulses and the re-emission tail."""
    return Grid2D.square(default_time_axis(inp.pulses, params.kappa, count))


def zeta(params: EmitterParams, inp: TwoPhotonInput, p1: float, p2: float, *, profile: str = "tight") -> complex:
    """Time-ordered re-absorption term; see :meth:`OneChannelScattering.zeta`."""
    return _solver(params, inp, profile).zeta(float(p1), float(p2))


def nonlinear_term(params: EmitterParams, inp: TwoPhotonInput, p1, p2, *, profile: str = "tight"):
    """Emitter-induced part ``n(p1, p2)`` of the output amplitude."""
    return _solver(params, inp, profile).nonlinear(p1, p2)


def eta_time(
    params: EmitterParams,
    inp: TwoPhotonInput,
    grid: Grid2D | None = None,
    *,
    profile: str = "tight",
    check: bool = True,
) -> TwoPhotonAmplitude:
    """Output two-photon amplitude on a time grid.

    Parameters
    ----------
    grid : Grid2D, optional
        Defaults to :func:`default_grid`.
    check : bool
        Verify that both axes cover the pulses and the re-emission tail.

    Raises
    ------
    GridTooShort
    """
    grid = grid or default_grid(params, inp)
    if check:
        check_grid(grid.axis1, inp.pulses, params.kappa)
        check_grid(grid.axis2, inp.pulses, params.kappa)
    return _solver(params, inp, profile).amplitude(grid)


# ---------------------------------------------------------------------------
# Frequency domain
# ---------------------------------------------------------------------------


def mixing_kernel(params: EmitterParams, omega1, omega2, mu1, mu2):
    """Four-wave-mixing weight ``(G(w1) - 1)(G(w2) - 1)(G(mu1) + G(mu2) - 2)``."""
    g = functools.partial(transfer_scalar, params)
    return (g(omega1) - 1.0) * (g(omega2) - 1.0) * (g(mu1) + g(mu2) - 2.0)


def _pulse_scale(pulses: Sequence[PulseSpec]) -> float:
    return max(p.rate if not hasattr(p, "grid") else 1.0 / (p.grid.stop - p.grid.start) for p in pulses)


def energy_integral(
    spectra: tuple,
    transfer,
    total: np.ndarray,
    *,
    scale: float,
    tol: float,
    extra_points: Sequence[float] = (),
) -> np.ndarray:
    """``J(W) = int f1[mu] f2[W - mu] (G(mu) + G(W - mu) - 2) dmu`` for every ``W`` in ``total``.

    Only the sum ``W`` of the output frequencies enters, so the integral is
    computed once per distinct sum.  Both photon energies ``mu`` and
    ``W - mu`` add up to ``W`` by construction.
    """
    f1, f2 = spectra
    total = np.asarray(total, dtype=float)

    def integrand(mu, k):
        w = total[k[:, 0]][:, None]
        other = w - mu
        return f1(mu) * f2(other) * (transfer(mu) + transfer(other) - 2.0)

    pts = np.stack([np.zeros_like(total), total] + [total * 0 + p for p in extra_points]
                   + [total - p for p in extra_points], axis=1)
    values, _ = quad_batch(
        integrand, np.full(total.shape, -np.inf), np.full(total.shape, np.inf),
        tol=tol, points=pts, scale=scale, max_panels=20_000,
    )
    return values


def _frequency_sums(grid: Grid2D):
    """Distinct values of ``w1 + w2`` and the index map back onto the grid."""
    a1, a2 = grid.axis1, grid.axis2
    if math.isclose(a1.step, a2.step, rel_tol=1e-12):
        n1, n2 = a1.count, a2.count
        sums = a1.start + a2.start + a1.step * np.arange(n1 + n2 - 1)
        index = np.add.outer(np.arange(n1), np.arange(n2))
        return sums, index
    w1, w2 = grid.mesh()
    sums, inverse = np.unique(w1 + w2, return_inverse=True)
    return sums, inverse.reshape(grid.shape)


def eta_freq(
    params: EmitterParams,
    inp: TwoPhotonInput,
    grid: Grid2D,
    *,
    profile: str = "tight",
) -> TwoPhotonAmplitude:
    """Output two-photon amplitude on a frequency grid.

    ``eta[w1, w2] = G(w1) G(w2) (f1[w2] f2[w1] + f1[w1] f2[w2])
    + (1 / pi kappa) int f1[mu] f2[w1 + w2 - mu] g(w1, w2, mu, w1 + w2 - mu) dmu``
    with ``g`` the :func:`mixing_kernel`.

    Raises
    ------
    NoConvergence
        If the mixing integral cannot be resolved.
    """
    prof = get_profile(profile)
    f1, f2 = inp.xi1.fourier, inp.xi2.fourier
    g = functools.partial(transfer_scalar, params)
    w1, w2 = grid.axis1.points, grid.axis2.points
    lin = np.outer(g(w1) * f1(w1), g(w2) * f2(w2))
    if grid.is_square:
        lin = lin + lin.T
    else:
        lin = lin + np.outer(g(w1) * f2(w1), g(w2) * f1(w2))
    sums, index = _frequency_sums(grid)
    scale = max(params.kappa, _pulse_scale(inp.pulses))
    jw = energy_integral((f1, f2), g, sums, scale=scale, tol=prof.quad_tol, extra_points=(-params.omega_d,))
    mixing = np.outer(g(w1) - 1.0, g(w2) - 1.0) * jw[index] / (math.pi * params.kappa)
    return TwoPhotonAmplitude(grid=grid, values=lin + mixing, domain="frequency", n2=inp.n2)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


class _Quadratures:
    """Building blocks of the oracle, each a fresh adaptive quadrature."""

    def __init__(self, params: EmitterParams, inp: TwoPhotonInput, tol: float):
        self.kappa = params.kappa
        self.a = params.rate
        self.b = np.conj(params.rate)
        self.xi = (inp.xi1, inp.xi2)
        self.tol = tol
        self.lo = [p.support(MESH_ENERGY_EPS)[0] for p in self.xi]
        self.start = min(self.lo)
        self.points = sorted({b for p in self.xi for b in p.breakpoints})

    def running(self, j: int, x) -> np.ndarray:
        """``I_j(x) = int_{-inf}^x exp(-a (x - s)) xi_j(s) ds`` for many ``x`` at once."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        flat = x.ravel()
        lo = self.lo[j]
        upper = np.maximum(flat, lo)
        pulse, a = self.xi[j], self.a
        vals, _ = quad_batch(
            lambda s, k: np.exp(-a * (upper[k] - s)) * pulse.evaluate(s),
            np.full(flat.shape, lo), upper, tol=self.tol, points=self.points, max_panels=50_000,
        )
        return vals.reshape(x.shape)

    def source(self, x) -> np.ndarray:
        """``q(x) = xi1(x) I2(x) + xi2(x) I1(x)``."""
        x1, x2 = self.xi[0].evaluate(x), self.xi[1].evaluate(x)
        return x1 * self.running(1, x) + x2 * self.running(0, x)

    def outer(self, f, lo: float, hi: float) -> complex:
        if hi <= lo:
            return 0j
        pts = [p for p in self.points if lo < p < hi]
        return adaptive_quad(f, lo, hi, self.tol * 10, points=pts, max_panels=50_000)

    def ordered_return(self, p1: float, p2: float) -> complex:
        """Delta-collapsed term where the first output photon is absorbed back: needs p1 < p2."""
        a, b = self.a, self.b
        if not p2 > p1:
            return 0j
        return 2.0 * self.kappa**2 * self.outer(
            lambda tau: np.exp(-a * (p2 - tau) - b * (tau - p1)) * self.source(tau), max(p1, self.start), p2)

    def reemission(self, p1: float, p2: float) -> complex:
        """Delta-collapsed six-fold term with the inner excitation integral done numerically."""
        a, b = self.a, self.b

        def phi(r):
            r = np.atleast_1d(r)
            flat = r.ravel()
            upper = np.minimum(flat, p1)
            vals, _ = quad_batch(
                lambda tau, k: np.exp(-a * (p1 - tau) - b * (flat[k] - tau)),
                np.full(flat.shape, -np.inf), upper, tol=self.tol, scale=1.0 / self.kappa,
            )
            return vals.reshape(r.shape)

        return -2.0 * self.kappa**3 * self.outer(
            lambda r: np.exp(-a * (p2 - r)) * self.source(r) * phi(r), self.start, p2)

    def gamma(self, p1: float, p2: float, cache: dict) -> complex:
        """The unsymmetrized correlation ``Gamma(p1, p2)``."""
        kappa = self.kappa
        x1p1, x2p1 = complex(self.xi[0].evaluate(p1)), complex(self.xi[1].evaluate(p1))
        x1p2, x2p2 = complex(self.xi[0].evaluate(p2)), complex(self.xi[1].evaluate(p2))
        i1p1, i2p1 = cache[(0, p1)], cache[(1, p1)]
        i1p2, i2p2 = cache[(0, p2)], cache[(1, p2)]
        free = x1p1 * x2p2 + x1p2 * x2p1
        first = -kappa * (x1p1 * i2p2 + x2p1 * i1p2)
        second = -kappa * (x1p2 * i2p1 + x2p2 * i1p1)
        both = kappa**2 * (i1p2 * i2p1 + i2p2 * i1p1)
        return free + first + second + both + self.ordered_return(p1, p2) + self.reemission(p1, p2)


def lemma_oracle(params: EmitterParams, inp: TwoPhotonInput, p1: float, p2: float, *, tol: float = 1e-11) -> complex:
    """Brute-force output amplitude at one point.

    Evaluates the input-output correlation ``Gamma(p1, p2)`` term by term with
    nested adaptive quadrature (every Dirac delta collapsed analytically
    first) and returns ``(Gamma(p1, p2) + Gamma(p2, p1)) / 2``.  Slow; meant
    for checking :func:`eta_time` at a handful of points.
    """
    q = _Quadratures(params, inp, tol)
    p1, p2 = float(p1), float(p2)
    cache = {}
    for j in (0, 1):
        vals = q.running(j, np.array([p1, p2]))
        cache[(j, p1)], cache[(j, p2)] = complex(vals[0]), complex(vals[1])
    return 0.5 * (q.gamma(p1, p2, cache) + q.gamma(p2, p1, cache))


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def time_density(field: TwoPhotonAmplitude, scale: str = "normalized") -> np.ndarray:
    """Joint detection density.

    ``"normalized"`` returns ``|eta|^2 / (2 N2)``, which integrates to one over
    the plane.  ``"paper_fock"`` returns ``|eta|^2 / 8``, a fixed scale for comparing
    two-photon Fock-state plots; it integrates to one half.

    Raises
    ------
    ScaleMismatch
        ``"paper_fock"`` on a field whose input is not a two-photon Fock state.
    """
    if field.domain != "time":
        raise ValueError("time_density expects a time-domain field")
    mag = np.abs(field.values) ** 2
    if scale == "normalized":
        return mag / (2.0 * field.n2)
    if scale == "paper_fock":
        if field.n2 != 2.0:
            raise ScaleMismatch(f"paper_fock scale needs N2 = 2, field has N2 = {field.n2:g}")
        return mag / 8.0
    raise ValueError(f"unknown density scale {scale!r}")
