"""Two photons, one per counter-propagating channel, scattering off a two-level emitter.

Photon ``xi1`` enters channel 1 and ``xi2`` enters channel 2.  With
``u_i = g_i1 * xi1`` and ``v_i = g_i2 * xi2`` the output amplitudes are

    F11(p1, p2) = u1(p1) v1(p2) + v1(p1) u1(p2) + 2 kappa1 K(p1, p2)
    A12(p1, p2) = u1(p1) v2(p2) + v1(p1) u2(p2) + 2 sqrt(kappa1 kappa2) K(p1, p2)
    F22(p1, p2) = u2(p1) v2(p2) + v2(p1) u2(p2) + 2 kappa2 K(p1, p2)

where ``A12`` has channel 1 at ``p1`` and channel 2 at ``p2``, and
``K = exp(-Gamma |p1 - p2| / 2) R(min(p1, p2))`` with ``Gamma = kappa1 +
kappa2`` and ``R`` the running integral, at rate ``Gamma``, of
``xi1 (g12 * xi2) + xi2 (g12 * xi1)``.  The state is
``1/2 F11 b1 b1 + A12 b1 b2 + 1/2 F22 b2 b2``.

``A12`` is exchange symmetric only when the two channels see the same
input, i.e. equal coupling and identical pulses.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass

import numpy as np

from .lti_response import (
    EmitterParams,
    TwoChannelParams,
    build_mesh,
    check_grid,
    default_time_axis,
    matrix_response,
    transfer_matrix,
)
from .numerics import (
    Grid2D,
    MeshCumulative,
    get_profile,
    grid_integral,
    separable_kernel_norm,
    transform2d,
)
from .one_channel import _Quadratures, _frequency_sums, _pulse_scale, energy_integral
from .pulse_shapes import TwoPhotonInput

__all__ = [
    "ChannelResolvedAmplitude",
    "TwoChannelScattering",
    "eta_ij_time",
    "chi",
    "T_ij_freq",
    "channel_probabilities",
    "hom_difference",
    "appendix_oracle",
    "channel_fourier2d",
    "default_grid",
]

PAIRS = ("11", "12", "22")


@dataclass(frozen=True, eq=False)
class ChannelResolvedAmplitude:
    """Channel-resolved two-photon amplitudes on a 2D grid.

    Attributes
    ----------
    grid : Grid2D
    eta11, eta12, eta22 : ndarray
        Time domain: ``F11``, ``A12`` and ``F22`` (see module docstring).
        Frequency domain: ``T11``, ``T12`` and ``T22``.  In ``eta12`` the
        first axis belongs to channel 1.
    domain : {"time", "frequency"}
    breakpoints : tuple of float
        Jump lines of the time-domain fields (kept through transforms).
    probabilities : tuple of float or None
        ``(P11, P12, P22)`` computed by the producer without sampling error.
    diagonal_kink : bool
        The fields have a crease along ``p1 = p2``.
    """

    grid: Grid2D
    eta11: np.ndarray
    eta12: np.ndarray
    eta22: np.ndarray
    domain: str
    breakpoints: tuple[float, ...] = ()
    probabilities: tuple[float, float, float] | None = None
    diagonal_kink: bool = False

    def __post_init__(self):
        if self.domain not in ("time", "frequency"):
            raise ValueError(f"domain must be 'time' or 'frequency', got {self.domain!r}")
        for name in ("eta11", "eta12", "eta22"):
            if np.shape(getattr(self, name)) != self.grid.shape:
                raise ValueError(f"{name} does not match the grid shape")

    def pair(self, name: str) -> np.ndarray:
        return getattr(self, "eta" + name)

    def symmetry_errors(self) -> dict[str, float]:
        """Largest exchange asymmetry of each stored matrix."""
        if not self.grid.is_square:
            raise ValueError("exchange symmetry needs identical axes")
        return {k: float(np.max(np.abs(self.pair(k) - self.pair(k).T))) for k in PAIRS}


# ---------------------------------------------------------------------------
# Closed-form solver
# ---------------------------------------------------------------------------


def _other(k: int) -> int:
    """The channel index written ``2/k``: 2 for 1 and 1 for 2."""
    return 2 // k


class TwoChannelScattering:
    """One-dimensional ingredients of the two-channel output amplitudes.

    Parameters
    ----------
    params : TwoChannelParams
    inp : TwoPhotonInput
        ``xi1`` enters channel 1 and ``xi2`` channel 2.
    profile : {"tight", "figure"}
    """

    def __init__(self, params: TwoChannelParams, inp: TwoPhotonInput, profile="tight"):
        self.params = params
        self.inp = inp
        self.profile = get_profile(profile)
        rate = params.rate
        self.mesh = mesh = build_mesh(inp.pulses, rate, self.profile)
        base1 = matrix_response(params, 1, 1, inp.xi1, mesh=mesh)
        base2 = base1 if inp.is_fock else matrix_response(params, 2, 2, inp.xi2, mesh=mesh)
        # response[(i, j)] is g_ij * xi_j: output channel i, input channel j.
        self.response = {
            (1, 1): base1,
            (2, 1): matrix_response(params, 2, 1, inp.xi1, mesh=mesh, base=base1),
            (1, 2): matrix_response(params, 1, 2, inp.xi2, mesh=mesh, base=base2),
            (2, 2): matrix_response(params, 2, 2, inp.xi2, mesh=mesh, base=base2),
        }
        x1, x2 = base1.pulse_values, base2.pulse_values
        source = x1 * self.response[(1, 2)].on_mesh + x2 * self.response[(2, 1)].on_mesh
        self.memory = MeshCumulative(mesh, params.total, source)
        self.breakpoints = tuple(sorted({b for p in inp.pulses for b in p.breakpoints}))
        self._equal_memory = None
        self._conv = {}

    # -- building blocks ---------------------------------------------------

    def g(self, i: int, j: int, t) -> np.ndarray:
        """``g_ij * xi_j`` at times ``t``."""
        return self.response[(i, j)](t)

    def conv(self, a: int, b: int, k: int, t) -> np.ndarray:
        """``g_{G_ab} * xi_k``: the impulse response of matrix entry ``(a, b)`` applied to pulse ``k``."""
        key = (a, b, k)
        if key not in self._conv:
            base = self.response[(k, k)]
            self._conv[key] = matrix_response(self.params, a, b, base.pulse, mesh=self.mesh, base=base)
        return self._conv[key](t)

    def u(self, i: int, t):
        return self.g(i, 1, t)

    def v(self, i: int, t):
        return self.g(i, 2, t)

    def crease(self, p1, p2) -> np.ndarray:
        """``exp(-Gamma |p1 - p2| / 2) R(min(p1, p2))``."""
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        return np.exp(-self.params.rate * np.abs(p1 - p2)) * self.memory(np.minimum(p1, p2))

    def coupling(self, name: str) -> float:
        k1, k2 = self.params.kappa1, self.params.kappa2
        return {"11": 2.0 * k1, "12": 2.0 * math.sqrt(k1 * k2), "22": 2.0 * k2}[name]

    def _linear_factors(self, name: str):
        """``(xs, ys)`` with ``sum_r xs[r](p1) ys[r](p2)`` the single-photon part."""
        r = self.response
        if name == "11":
            return [r[(1, 1)], r[(1, 2)]], [r[(1, 2)], r[(1, 1)]]
        if name == "12":
            return [r[(1, 1)], r[(1, 2)]], [r[(2, 2)], r[(2, 1)]]
        return [r[(2, 1)], r[(2, 2)]], [r[(2, 2)], r[(2, 1)]]

    # -- symmetric closed form ---------------------------------------------

    def amplitude(self, name: str, p1, p2) -> np.ndarray:
        """``F11``, ``A12`` or ``F22`` at arbitrary points."""
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        xs, ys = self._linear_factors(name)
        lin = sum(x(p1) * y(p2) for x, y in zip(xs, ys))
        return lin + self.coupling(name) * self.crease(p1, p2)

    def probabilities(self) -> tuple[float, float, float]:
        """``(P11, P12, P22)`` by one-dimensional reduction of the plane integrals."""
        out = []
        for name, weight in zip(PAIRS, (0.5, 1.0, 0.5)):
            xs, ys = self._linear_factors(name)
            norm = separable_kernel_norm(
                self.mesh, [x.on_mesh for x in xs], [y.on_mesh for y in ys],
                self.coupling(name), self.params.rate, self.memory.nodes,
            )
            out.append(weight * norm)
        return tuple(out)

    # -- time-ordered forms ------------------------------------------------

    def ordered(self, i: int, j: int, p1, p2) -> np.ndarray:
        """Time-ordered amplitude ``eta_ij(p1, p2)``: channel ``i`` at ``p1 >= p2``, zero otherwise.

        Follows the general index form: the single-photon part pairs
        ``g_ii * xi_i`` with ``g_{2/i, j} * xi_{2/i}``, and the emitter term
        weights the kernel values ``g_ij`` and ``g_{i, 2/j}`` by ``kappa_j`` and
        ``sqrt(kappa1 kappa2)``.
        """
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        o = _other(i)
        lin = self.conv(i, i, i, p1) * self.conv(o, j, o, p2) + self.conv(i, j, i, p2) * self.conv(o, i, o, p1)
        k = self.params
        weight = k.kappa(j) * self._smooth(i, j) + math.sqrt(k.kappa1 * k.kappa2) * self._smooth(i, _other(j))
        # int_{-inf}^{r} exp(-Gamma/2 (p2 - tau)) exp(-Gamma/2 (p1 - tau)) dtau, folded into R.
        nl = -2.0 * weight / k.total * self.crease(p1, p2)
        return np.where(p1 >= p2, lin + nl, 0j)

    def _smooth(self, i: int, j: int) -> float:
        """Coefficient of ``exp(-Gamma t / 2)`` in the impulse response ``g_ij``."""
        return -math.sqrt(self.params.kappa(i) * self.params.kappa(j))

    # -- equal coupling ----------------------------------------------------

    def chi(self, p1, p2) -> np.ndarray:
        """Emitter term for equal coupling and identical pulses (zero for ``p1 < p2``).

        ``4 kappa exp(-kappa (p1 + p2)) int_{-inf}^{p2} exp(2 kappa r) xi(r) (g12 * xi)(r) dr``.
        """
        self._require_equal()
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        kappa = self.params.kappa1
        mem = self._equal_chi_memory()(p2)
        return np.where(p1 >= p2, 4.0 * kappa * np.exp(-kappa * (p1 - p2)) * mem, 0j)

    def _require_equal(self):
        if not (self.params.is_equal and self.inp.is_fock):
            raise ValueError("the equal-coupling form needs kappa1 == kappa2 and identical pulses")

    def _equal_chi_memory(self) -> MeshCumulative:
        if self._equal_memory is None:
            kappa = self.params.kappa1
            x = self.response[(1, 1)].pulse_values
            self._equal_memory = MeshCumulative(self.mesh, 2.0 * kappa, x * self.response[(1, 2)].on_mesh)
        return self._equal_memory

    # -- grids -------------------------------------------------------------

    def sample(self, grid: Grid2D, path: str = "auto") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(F11, A12, F22)`` on a grid.

        ``path="general"`` symmetrizes the time-ordered amplitudes, halving the
        diagonal where both orderings contribute; ``"equal"`` uses the
        equal-coupling form; ``"closed"`` evaluates the symmetric closed form;
        ``"auto"`` picks ``"equal"`` when it applies and ``"closed"`` otherwise.
        """
        if path == "auto":
            path = "equal" if self.params.is_equal and self.inp.is_fock else "closed"
        if path == "closed":
            p1, p2 = grid.mesh()
            return tuple(self.amplitude(name, p1, p2) for name in PAIRS)
        if path == "equal":
            return self._sample_equal(grid)
        if path == "general":
            return self._sample_general(grid)
        raise ValueError(f"unknown path {path!r}")

    def _sample_general(self, grid: Grid2D):
        if not grid.is_square:
            raise ValueError("the time-ordered path needs identical axes")
        p1, p2 = grid.mesh()
        diag = np.eye(grid.axis1.count, dtype=bool)

        def ordered(i, j):
            eta = self.ordered(i, j, p1, p2)
            return np.where(diag, 0.5 * eta, eta)

        e11, e22 = ordered(1, 1), ordered(2, 2)
        e12, e21 = ordered(1, 2), ordered(2, 1)
        return e11 + e11.T, e12 + e21.T, e22 + e22.T

    def _sample_equal(self, grid: Grid2D):
        self._require_equal()
        if not grid.is_square:
            raise ValueError("the equal-coupling path needs identical axes")
        t = grid.axis1.points
        g11, g12 = self.g(1, 1, t), self.g(1, 2, t)
        kappa = self.params.kappa1
        mem = self._equal_chi_memory()(t)
        idx = np.minimum.outer(np.arange(t.size), np.arange(t.size))
        chi_sym = 4.0 * kappa * np.exp(-kappa * np.abs(np.subtract.outer(t, t))) * mem[idx]
        same = np.outer(g11, g12)
        same = same + same.T + chi_sym
        split = np.outer(g11, g11) + np.outer(g12, g12) + chi_sym
        return same, split, same

    def field(self, grid: Grid2D, path: str = "auto", with_probabilities: bool = True) -> ChannelResolvedAmplitude:
        f11, a12, f22 = self.sample(grid, path)
        return ChannelResolvedAmplitude(
            grid=grid, eta11=f11, eta12=a12, eta22=f22, domain="time",
            breakpoints=self.breakpoints,
            probabilities=self.probabilities() if with_probabilities else None,
            diagonal_kink=True,
        )


@functools.lru_cache(maxsize=8)
def _solver(params: TwoChannelParams, inp: TwoPhotonInput, profile: str) -> TwoChannelScattering:
    return TwoChannelScattering(params, inp, profile)


def default_grid(params: TwoChannelParams, inp: TwoPhotonInput, count: int = 512) -> Grid2D:
    """Square time grid covering the pulses and the re-emission tail."""
    return Grid2D.square(default_time_axis(inp.pulses, params.total, count))


def eta_ij_time(
    params: TwoChannelParams,
    inp: TwoPhotonInput,
    grid: Grid2D | None = None,
    *,
    path: str = "auto",
    profile: str = "tight",
    check: bool = True,
) -> ChannelResolvedAmplitude:
    """Channel-resolved output amplitudes on a time grid.

    Parameters
    ----------
    path : {"auto", "equal", "general", "closed"}
        See :meth:`TwoChannelScattering.sample`.

    Raises
    ------
    GridTooShort
    """
    grid = grid or default_grid(params, inp)
    if check:
        check_grid(grid.axis1, inp.pulses, params.total)
        check_grid(grid.axis2, inp.pulses, params.total)
    return _solver(params, inp, profile).field(grid, path)


def chi(params: TwoChannelParams, pulse, p1, p2, *, profile: str = "tight") -> np.ndarray:
    """Equal-coupling emitter term for two identical pulses; zero for ``p1 < p2``."""
    if not params.is_equal:
        raise ValueError("chi is defined for kappa1 == kappa2")
    return _solver(params, TwoPhotonInput.fock(pulse), profile).chi(p1, p2)


# ---------------------------------------------------------------------------
# Frequency domain
# ---------------------------------------------------------------------------


def mixing_prefactors(params: TwoChannelParams) -> dict[str, float]:
    """Weights of the four-wave-mixing integral in ``T11``, ``T12`` and ``T22``."""
    k1, k2 = params.kappa1, params.kappa2
    root = math.sqrt(k1 * k2)
    return {
        "11": root / (math.pi * k1**2),
        "12": k2 / (math.pi * k1**2),
        "22": k2 * root / (math.pi * k1**3),
    }


def T_ij_freq(
    params: TwoChannelParams,
    inp: TwoPhotonInput,
    grid: Grid2D,
    *,
    profile: str = "tight",
) -> ChannelResolvedAmplitude:
    """Channel-resolved output amplitudes on a frequency grid.

    The mixing kernel is built from ``G11`` alone,
    ``(G11[w1] - 1)(G11[w2] - 1)(G11[mu1] + G11[mu2] - 2)``, and the inner
    integral runs over ``mu1`` with ``mu2 = w1 + w2 - mu1``.

    Raises
    ------
    NoConvergence
    """
    prof = get_profile(profile)
    f1, f2 = inp.xi1.fourier, inp.xi2.fourier
    w1, w2 = grid.axis1.points, grid.axis2.points
    m1, m2 = transfer_matrix(params, w1), transfer_matrix(params, w2)

    def entry(m, a, b):
        return m[:, a - 1, b - 1]

    a1, b1 = f1(w1), f2(w1)
    a2, b2 = f1(w2), f2(w2)
    t11 = np.outer(entry(m1, 1, 1) * a1, entry(m2, 1, 2) * b2) + np.outer(entry(m1, 1, 2) * b1, entry(m2, 1, 1) * a2)
    t12 = np.outer(entry(m1, 1, 1) * a1, entry(m2, 2, 2) * b2) + np.outer(entry(m1, 1, 2) * b1, entry(m2, 1, 2) * a2)
    t22 = np.outer(entry(m1, 1, 2) * a1, entry(m2, 2, 2) * b2) + np.outer(entry(m1, 2, 2) * b1, entry(m2, 1, 2) * a2)

    def g11(w):
        return transfer_matrix(params, w)[..., 0, 0]

    sums, index = _frequency_sums(grid)
    scale = max(params.total, _pulse_scale(inp.pulses))
    jw = energy_integral((f1, f2), g11, sums, scale=scale, tol=prof.quad_tol)
    mixing = np.outer(entry(m1, 1, 1) - 1.0, entry(m2, 1, 1) - 1.0) * jw[index]
    c = mixing_prefactors(params)
    return ChannelResolvedAmplitude(
        grid=grid,
        eta11=t11 + c["11"] * mixing,
        eta12=t12 + c["12"] * mixing,
        eta22=t22 + c["22"] * mixing,
        domain="frequency",
    )


def channel_fourier2d(field: ChannelResolvedAmplitude, *, method: str = "filon") -> ChannelResolvedAmplitude:
    """Transform all three time-domain amplitudes to the frequency domain."""
    if field.domain != "time":
        raise ValueError("channel_fourier2d expects a time-domain field")
    out = {}
    for name in PAIRS:
        out["eta" + name], freq = transform2d(
            field.pair(name), field.grid, method=method, breakpoints=field.breakpoints,
            diagonal_kink=field.diagonal_kink,
        )
    return dataclasses.replace(field, grid=freq, domain="frequency", probabilities=None, **out)


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------


def channel_probabilities(field: ChannelResolvedAmplitude) -> tuple[float, float, float]:
    """``(P11, P12, P22)``: both photons in channel 1, one in each, both in channel 2.

    Uses the weights 1/2, 1, 1/2 of the state expansion.  The producer's
    exact values are returned when present; otherwise the plane integrals are
    taken by the jump-aware trapezoid rule on the grid.
    """
    if field.probabilities is not None:
        return field.probabilities
    bps = field.breakpoints if field.domain == "time" else ()
    norms = [grid_integral(np.abs(field.pair(n)) ** 2, field.grid, bps).real for n in PAIRS]
    return 0.5 * norms[0], norms[1], 0.5 * norms[2]


def hom_difference(field: ChannelResolvedAmplitude) -> np.ndarray:
    """Same-channel minus split-channel joint spectrum, ``|T11|^2/2 + |T22|^2/2 - |T12|^2``.

    Positive values mark frequency pairs where both photons prefer to leave
    through the same channel (bunching).
    """
    if field.domain != "frequency":
        raise ValueError("hom_difference expects a frequency-domain field")
    same = 0.5 * np.abs(field.eta11) ** 2 + 0.5 * np.abs(field.eta22) ** 2
    return same - np.abs(field.eta12) ** 2


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def appendix_oracle(
    params: TwoChannelParams,
    inp: TwoPhotonInput,
    i: int,
    j: int,
    p1: float,
    p2: float,
    *,
    tol: float = 1e-11,
) -> complex:
    """Brute-force amplitude for channel ``i`` at ``p1`` and channel ``j`` at ``p2``.

    Rotates the channels into the combination ``c = s1 b1 + s2 b2`` that
    couples to the emitter with rate ``Gamma`` and the orthogonal one that
    passes untouched (``s_k = sqrt(kappa_k / Gamma)``).  The coupled part is a
    one-channel problem solved by the nested quadrature of
    :func:`~tls2p.one_channel.lemma_oracle`; single-photon envelopes come from
    direct adaptive quadrature.  Returns ``F11``, ``F22``, ``A12(p1, p2)``
    or ``A12(p2, p1)`` depending on ``(i, j)``.
    """
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError("channel indices must be 1 or 2")
    total = params.total
    s = (math.sqrt(params.kappa1 / total), math.sqrt(params.kappa2 / total))
    bright = (s[0], s[1])
    dark = (s[1], -s[0])
    q = _Quadratures(EmitterParams(total), inp, tol)
    times = np.array([p1, p2], dtype=float)
    running = [q.running(k, times) for k in (0, 1)]
    pulse = [np.array([inp.pulses[k].evaluate(t) for t in times]) for k in (0, 1)]
    nu = [pulse[k] - total * running[k] for k in (0, 1)]
    cache = {(k, float(t)): complex(running[k][n]) for k in (0, 1) for n, t in enumerate(times)}
    coupled = {}

    def eta_c(a, b):
        key = (a, b) if a <= b else (b, a)
        if key not in coupled:
            coupled[key] = 0.5 * (q.gamma(a, b, cache) + q.gamma(b, a, cache))
        return coupled[key]

    def raw(ci, cj, x, y):
        """Amplitude on ``b_ci(t_x) b_cj(t_y)`` before symmetrization."""
        ta, tb = times[x], times[y]
        cc = 0.5 * s[0] * s[1] * bright[ci] * bright[cj] * eta_c(ta, tb)
        cd = -s[0] ** 2 * bright[ci] * dark[cj] * nu[0][x] * pulse[1][y]
        dc = s[1] ** 2 * dark[ci] * bright[cj] * pulse[0][x] * nu[1][y]
        dd = -s[0] * s[1] * dark[ci] * dark[cj] * pulse[0][x] * pulse[1][y]
        return cc + cd + dc + dd

    a, b = i - 1, j - 1
    return complex(raw(a, b, 0, 1) + raw(b, a, 1, 0))
