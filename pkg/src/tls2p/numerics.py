"""Grids, quadrature, exponential-kernel cumulative integrals and the 2D Fourier bridge.

Everything here is problem independent.  The physics modules describe their
integrands and call into these routines.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.signal import lfilter

from .errors import BoundaryLeak, NoConvergence

SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Tolerance profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToleranceProfile:
    """Accuracy knobs shared by the solvers.

    Attributes
    ----------
    name : str
        ``"tight"`` or ``"figure"``.
    resolution : float
        Internal mesh step in units of the fastest time scale of the problem.
    quad_tol : float
        Relative tolerance handed to adaptive quadrature.
    """

    name: str
    resolution: float
    quad_tol: float


TOLERANCE_PROFILES = {
    "tight": ToleranceProfile("tight", resolution=0.01, quad_tol=1e-11),
    "figure": ToleranceProfile("figure", resolution=0.04, quad_tol=1e-8),
}


def get_profile(profile: str | ToleranceProfile) -> ToleranceProfile:
    if isinstance(profile, ToleranceProfile):
        return profile
    try:
        return TOLERANCE_PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown tolerance profile {profile!r}") from None


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform lattice ``start + k*step`` for ``k = 0 .. count-1``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 8:
            raise ValueError(f"grid count must be an integer >= 8, got {self.count}")
        if not math.isfinite(self.start):
            raise ValueError("grid start must be finite")

    @classmethod
    def from_range(cls, start: float, stop: float, count: int) -> "Grid1D":
        """Grid with both end points included, like ``numpy.linspace``."""
        if not stop > start:
            raise ValueError(f"grid stop {stop} must exceed start {start}")
        return cls(float(start), (stop - start) / (count - 1), int(count))

    @property
    def stop(self) -> float:
        return self.start + (self.count - 1) * self.step

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def node_index(self, t: float, rtol: float = 1e-9) -> int | None:
        """Index of the node located at ``t``, or None if ``t`` is not a node."""
        k = round((t - self.start) / self.step)
        if 0 <= k < self.count and abs(self.start + k * self.step - t) <= rtol * self.step:
            return int(k)
        return None


@dataclass(frozen=True)
class Grid2D:
    """Tensor-product lattice; axis1 indexes rows, axis2 columns."""

    axis1: Grid1D
    axis2: Grid1D

    @classmethod
    def square(cls, axis: Grid1D) -> "Grid2D":
        return cls(axis, axis)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.axis1.count, self.axis2.count)

    @property
    def is_square(self) -> bool:
        return self.axis1 == self.axis2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis1.points, self.axis2.points, indexing="ij")


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK15_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK15_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G7_WEIGHTS = np.zeros(15)
G7_WEIGHTS[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[:-1][::-1]])
G7_WEIGHTS[7] = _WG[-1]


class _IntervalMap:
    """Maps the reference variable u onto x, handling infinite end points."""

    def __init__(self, a, b, scale):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.scale = np.broadcast_to(np.asarray(scale, dtype=float), self.a.shape)
        lo_inf = np.isneginf(self.a)
        hi_inf = np.isposinf(self.b)
        if np.any(np.isposinf(self.a)) or np.any(np.isneginf(self.b)):
            raise ValueError("integration limits must satisfy a <= b")
        if lo_inf.any() and not lo_inf.all() or hi_inf.any() and not hi_inf.all():
            raise ValueError("infinite limits must be shared by every batch member")
        self.kind = (bool(lo_inf.all()), bool(hi_inf.all()))

    def u_limits(self):
        lo_inf, hi_inf = self.kind
        if lo_inf and hi_inf:
            return -np.ones_like(self.a), np.ones_like(self.a)
        if hi_inf:
            return np.zeros_like(self.a), np.ones_like(self.a)
        if lo_inf:
            return -np.ones_like(self.b), np.zeros_like(self.b)
        return self.a.copy(), self.b.copy()

    def to_u(self, x, k):
        lo_inf, hi_inf = self.kind
        s = self.scale[k]
        if lo_inf and hi_inf:
            y = x / s
            return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * y * y))
        if hi_inf:
            y = (x - self.a[k]) / s
            return y / (1.0 + y)
        if lo_inf:
            y = (x - self.b[k]) / s
            return y / (1.0 - y)
        return x

    def to_x(self, u, k):
        """Return x(u) and dx/du for owner indices ``k`` (broadcast against u)."""
        lo_inf, hi_inf = self.kind
        s = self.scale[k]
        if lo_inf and hi_inf:
            d = 1.0 - u * u
            return s * u / d, s * (1.0 + u * u) / (d * d)
        if hi_inf:
            d = 1.0 - u
            return self.a[k] + s * u / d, s / (d * d)
        if lo_inf:
            d = 1.0 + u
            return self.b[k] + s * u / d, s / (d * d)
        return u, np.ones_like(u)


def quad_batch(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a,
    b,
    *,
    tol: float = 1e-10,
    points=None,
    scale=1.0,
    max_panels: int = 10_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a family of complex integrands with globally adaptive GK15.

    Parameters
    ----------
    f : callable
        ``f(x, k)`` receives node positions ``x`` of shape ``(m, 15)`` and the
        owning integral index ``k`` of shape ``(m, 1)``; it returns the integrand
        values with the shape of ``x``.
    a, b : array_like
        Lower and upper limits, one pair per integral.  ``-inf``/``inf`` are
        allowed when shared by every member of the batch.
    tol : float
        Each integral is refined until its estimated error is below
        ``tol * (1 + |I|)``.
    points : sequence or array, optional
        Interior break points.  Either a flat sequence shared by every integral
        or an array of shape ``(n, p)`` (NaN entries are ignored).
    scale : float or array_like
        Length scale used when mapping infinite intervals.
    max_panels : int
        Subdivision budget per integral.

    Returns
    -------
    values, errors : ndarray
        Integral estimates and their Kronrod-minus-Gauss error estimates.

    Raises
    ------
    NoConvergence
        If an integral needs more than ``max_panels`` panels.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    n = a.size
    imap = _IntervalMap(a, b, scale)
    ua, ub = imap.u_limits()

    if points is None:
        pts = np.empty((n, 0))
    else:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = np.broadcast_to(pts, (n, pts.size))
    lo_list, hi_list, owner_list = [], [], []
    for k in range(n):
        row = pts[k][np.isfinite(pts[k])] if pts.shape[1] else np.empty(0)
        row = row[(row > a[k]) & (row < b[k])]
        cuts = np.unique(imap.to_u(row, np.full(row.shape, k))) if row.size else row
        edges = np.concatenate([[ua[k]], cuts, [ub[k]]])
        edges = edges[np.concatenate([[True], np.diff(edges) > 0])]
        lo_list.append(edges[:-1])
        hi_list.append(edges[1:])
        owner_list.append(np.full(edges.size - 1, k))
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    owner = np.concatenate(owner_list)

    def panel_rule(lo, hi, owner):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        u = mid[:, None] + half[:, None] * GK15_NODES[None, :]
        k = owner[:, None]
        x, jac = imap.to_x(u, k)
        vals = np.asarray(f(x, k), dtype=complex) * jac
        kron = half * (vals @ GK15_WEIGHTS)
        gauss = half * (vals @ G7_WEIGHTS)
        return kron, np.abs(kron - gauss)

    kron, err = panel_rule(lo, hi, owner)
    if not (np.all(np.isfinite(kron)) and np.all(np.isfinite(err))):
        raise NoConvergence("integrand produced non-finite values")
    length = np.zeros(n)
    np.add.at(length, owner, hi - lo)

    while True:
        total = np.zeros(n, dtype=complex)
        total_err = np.zeros(n)
        np.add.at(total, owner, kron)
        np.add.at(total_err, owner, err)
        target = tol * (1.0 + np.abs(total))
        open_items = total_err > target
        if not open_items.any():
            return total, total_err
        share = target[owner] * (hi - lo) / length[owner]
        width_ok = (hi - lo) > 1e-13 * np.maximum(1.0, np.abs(lo) + np.abs(hi))
        split = open_items[owner] & (err > share) & width_ok
        if not split.any():
            # Remaining error is spread below the per-panel share or stuck at
            # round-off; halve the worst panel of each open integral instead.
            split = np.zeros_like(split)
            for k in np.flatnonzero(open_items):
                idx = np.flatnonzero((owner == k) & width_ok)
                if idx.size == 0:
                    return total, total_err
                split[idx[np.argmax(err[idx])]] = True
        counts = np.bincount(owner, minlength=n) + np.bincount(owner[split], minlength=n)
        if counts.max() > max_panels:
            raise NoConvergence(
                f"adaptive quadrature exceeded {max_panels} panels "
                f"(error estimate {total_err.max():.3g}, target {target.max():.3g})"
            )
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_owner = np.concatenate([owner[split], owner[split]])
        new_kron, new_err = panel_rule(new_lo, new_hi, new_owner)
        if not (np.all(np.isfinite(new_kron)) and np.all(np.isfinite(new_err))):
            raise NoConvergence("integrand produced non-finite values")
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        owner = np.concatenate([owner[keep], new_owner])
        kron = np.concatenate([kron[keep], new_kron])
        err = np.concatenate([err[keep], new_err])


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    points: Sequence[float] = (),
    scale: float = 1.0,
    max_panels: int = 10_000,
    full_output: bool = False,
):
    """Integrate a vectorized complex function over ``[a, b]``.

    ``a`` and ``b`` may be infinite.  The result satisfies
    ``|result - I| <= tol * (1 + |result|)`` according to the nested
    Gauss-Kronrod error estimate.  With ``full_output`` the error estimate is
    returned as well.
    """
    if a == b:
        return (0j, 0.0) if full_output else 0j
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    vals, errs = quad_batch(
        lambda x, k: f(x), [a], [b], tol=tol, points=list(points) or None,
        scale=scale, max_panels=max_panels,
    )
    value = sign * complex(vals[0])
    return (value, float(errs[0])) if full_output else value


# ---------------------------------------------------------------------------
# Exponential-kernel cumulative integrals
# ---------------------------------------------------------------------------


def _moments(x: complex, nmax: int) -> np.ndarray:
    """J_n(x) = int_0^1 exp(-x (1 - s)) s^n ds for n = 0..nmax."""
    out = np.empty(nmax + 1, dtype=complex)
    if abs(x) < 1.0:
        terms = np.arange(40)
        powers = (-x) ** terms
        for n in range(nmax + 1):
            # n! / (m + n + 1)!
            coeff = np.exp(math.lgamma(n + 1) - np.array([math.lgamma(m + n + 2) for m in terms]))
            out[n] = np.sum(powers * coeff)
        return out
    out[0] = -np.expm1(-x) / x
    for n in range(1, nmax + 1):
        out[n] = (1.0 - n * out[n - 1]) / x
    return out


def _lagrange_monomials(offsets: Sequence[int]) -> np.ndarray:
    """Row j holds the monomial coefficients of the Lagrange basis for node j."""
    nodes = np.asarray(offsets, dtype=float)
    vander = np.vander(nodes, increasing=True)
    return np.linalg.inv(vander).T


_STENCILS = {
    2: {"first": (0, 1), "interior": (0, 1), "last": (0, 1)},
    4: {"first": (0, 1, 2, 3), "interior": (-1, 0, 1, 2), "last": (-2, -1, 0, 1)},
}


def _cumexp_uniform(a: complex, f: np.ndarray, step: float, order: int = 4, initial=0.0) -> np.ndarray:
    """Cumulative ``I(t_k) = int_{t_0}^{t_k} e^{-a(t_k-r)} f(r) dr + e^{-a(t_k-t_0)} I_0``.

    The panel contribution integrates the exponential kernel exactly against
    a Lagrange interpolant of ``f`` (cubic for ``order=4``, linear for
    ``order=2``), and the panel results are chained with the exact factor
    ``exp(-a*step)``.
    """
    f = np.asarray(f, dtype=complex)
    count = f.size
    if count < 2:
        return np.full(count, initial, dtype=complex)
    if order == 4 and count < 4:
        order = 2
    x = complex(a) * step
    decay = np.exp(-x)
    moments = _moments(x, order - 1)
    stencils = _STENCILS[order]
    u = np.zeros(count - 1, dtype=complex)
    regions = {
        "first": slice(0, 1),
        "interior": slice(1, count - 2),
        "last": slice(count - 2, count - 1),
    }
    if order == 2:
        regions = {"interior": slice(0, count - 1)}
    for region, panels in regions.items():
        offsets = stencils[region]
        k = np.arange(count - 1)[panels]
        if k.size == 0:
            continue
        weights = step * (_lagrange_monomials(offsets) @ moments)
        for w, off in zip(weights, offsets):
            u[panels] += w * f[k + off]
    y = lfilter([1.0], [1.0, -decay], u, zi=np.array([decay * initial], dtype=complex))[0]
    return np.concatenate([[complex(initial)], y])


def cumexp(a: complex, samples, grid: Grid1D, *, order: int = 4, initial: complex = 0.0) -> np.ndarray:
    """Exponentially weighted running integral on a uniform grid.

    Computes ``I(t_k) = int_{start}^{t_k} exp(-a (t_k - r)) f(r) dr`` for every
    node in O(count) operations.

    Parameters
    ----------
    a : complex
        Kernel rate; ``Re(a) >= 0`` keeps the recursion stable.
    samples : array_like
        ``f`` sampled on ``grid``.
    grid : Grid1D
    order : {4, 2}
        Accuracy order of the local rule.
    initial : complex
        Value carried in at the first node.
    """
    if complex(a).real < 0:
        raise ValueError("cumexp requires Re(a) >= 0")
    samples = np.asarray(samples)
    if samples.shape != (grid.count,):
        raise ValueError("samples must match the grid")
    return _cumexp_uniform(a, samples, grid.step, order, initial)


# ---------------------------------------------------------------------------
# Piecewise-uniform meshes
# ---------------------------------------------------------------------------


class SegmentedMesh:
    """Concatenation of uniform segments that meet at break points.

    Each joint appears twice in :attr:`t`, once as the last node of the left
    segment and once as the first node of the right segment, so one-sided
    limits of discontinuous functions can be stored side by side.
    """

    def __init__(self, edges: Sequence[float], steps: Sequence[float]):
        edges = [float(e) for e in edges]
        if len(steps) != len(edges) - 1:
            raise ValueError("need one step per segment")
        self.edges = np.asarray(edges)
        self.segments: list[Grid1D] = []
        for lo, hi, h in zip(edges[:-1], edges[1:], steps):
            count = max(8, int(math.ceil((hi - lo) / h)) + 1)
            self.segments.append(Grid1D.from_range(lo, hi, count))
        sizes = [g.count for g in self.segments]
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        self.slices = [slice(int(s), int(e)) for s, e in zip(bounds[:-1], bounds[1:])]
        pieces = []
        for g, lo, hi in zip(self.segments, edges[:-1], edges[1:]):
            pts = g.points.copy()
            pts[0], pts[-1] = lo, hi
            pieces.append(pts)
        self.t = np.concatenate(pieces)
        self.size = self.t.size

    @property
    def start(self) -> float:
        return float(self.edges[0])

    @property
    def end(self) -> float:
        return float(self.edges[-1])

    def sample(self, fn: Callable, limit: Callable | None = None) -> np.ndarray:
        """Sample ``fn`` on every node; joints use ``limit(t, side)`` when given."""
        out = np.asarray(fn(self.t), dtype=complex).copy()
        if limit is not None:
            for k, sl in enumerate(self.slices):
                if k > 0:
                    out[sl.start] = limit(self.t[sl.start], "right")
                if k < len(self.slices) - 1:
                    out[sl.stop - 1] = limit(self.t[sl.stop - 1], "left")
        return out

    def cumexp(self, a: complex, values: np.ndarray, order: int = 4) -> np.ndarray:
        """Running exponentially weighted integral from the mesh start."""
        out = np.empty(self.size, dtype=complex)
        carry = 0j
        for grid, sl in zip(self.segments, self.slices):
            out[sl] = _cumexp_uniform(a, values[sl], grid.step, order, carry)
            carry = out[sl.stop - 1]
        return out

    def integral(self, values: np.ndarray, order: int = 4) -> complex:
        """Integral of the mesh function over the whole mesh."""
        return complex(self.cumexp(0.0, values, order)[-1])


class MeshCumulative:
    """Pointwise evaluator for ``I(t) = int_{-inf}^t exp(-rate (t - r)) f(r) dr``.

    The integrand must vanish before the mesh start and after the mesh end.
    Inside the mesh, values are interpolated with cubic Hermite polynomials
    whose slopes come from ``I' = f - rate * I``; beyond the end the exact
    exponential decay is used.
    """

    def __init__(self, mesh: SegmentedMesh, rate: complex, values: np.ndarray, order: int = 4):
        self.mesh = mesh
        self.rate = complex(rate)
        self.nodes = mesh.cumexp(self.rate, values, order)
        slopes = values - self.rate * self.nodes
        self._splines = [
            CubicHermiteSpline(mesh.t[sl], self.nodes[sl], slopes[sl]) for sl in mesh.slices
        ]
        self._inner = mesh.edges[1:-1]

    @property
    def end_value(self) -> complex:
        return complex(self.nodes[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        inside = (flat >= self.mesh.start) & (flat <= self.mesh.end)
        seg = np.searchsorted(self._inner, flat, side="left")
        for k, spline in enumerate(self._splines):
            sel = inside & (seg == k)
            if sel.any():
                out[sel] = spline(flat[sel])
        after = flat > self.mesh.end
        if after.any():
            out[after] = self.end_value * np.exp(-self.rate * (flat[after] - self.mesh.end))
        return out.reshape(t.shape)


def separable_kernel_norm(
    mesh: SegmentedMesh,
    xs: Sequence[np.ndarray],
    ys: Sequence[np.ndarray],
    coeff: complex,
    rate: complex,
    memory: np.ndarray,
) -> float:
    """Exact-in-1D evaluation of the plane integral of ``|F|^2`` for

    ``F(p1, p2) = sum_r x_r(p1) y_r(p2) + coeff * exp(-rate |p1 - p2|) * R(min(p1, p2))``

    with every function given on ``mesh`` and vanishing beyond it.  The
    double integral is reduced to running exponential integrals, so its
    accuracy is that of :func:`cumexp` rather than of a 2D tensor rule.
    """
    conj = np.conjugate
    gram_x = np.array([[mesh.integral(conj(xs[s]) * xs[r]) for r in range(len(xs))] for s in range(len(xs))])
    gram_y = np.array([[mesh.integral(conj(ys[s]) * ys[r]) for r in range(len(ys))] for s in range(len(ys))])
    linear = float(np.real(np.sum(gram_x * gram_y)))
    cross = 0j
    for x, y in zip(xs, ys):
        # Region p1 >= p2 (memory argument p2) and its mirror.
        cross += mesh.integral(conj(x) * mesh.cumexp(rate, conj(y) * memory))
        cross += mesh.integral(conj(y) * mesh.cumexp(rate, conj(x) * memory))
    cross *= coeff
    nl = 2.0 * abs(coeff) ** 2 * mesh.integral(mesh.cumexp(2.0 * rate.real, np.abs(memory) ** 2))
    return linear + 2.0 * float(np.real(cross)) + float(np.real(nl))


# ---------------------------------------------------------------------------
# Fourier bridge
# ---------------------------------------------------------------------------


def _filon_end_weight(theta: np.ndarray) -> np.ndarray:
    """E(theta) = int_0^1 (1 - u) exp(-i theta u) du."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 0.5
    ts = theta[small]
    acc = np.zeros(ts.shape, dtype=complex)
    for m in range(16):
        acc += (-1j * ts) ** m / math.factorial(m + 2)
    out[small] = acc
    tl = theta[~small]
    out[~small] = (1.0 - 1j * tl - np.exp(-1j * tl)) / tl**2
    return out


def frequency_axis(time_axis: Grid1D) -> Grid1D:
    """Frequency lattice conjugate to ``time_axis``; it contains 0 as a node."""
    n = time_axis.count
    dw = 2.0 * math.pi / (n * time_axis.step)
    return Grid1D(-(n // 2) * dw, dw, n)


class AxisTransform:
    """Continuous Fourier transform along one sampled axis.

    ``method="dft"`` is the rectangle-rule transform.  ``method="filon"``
    transforms the piecewise-linear interpolant exactly, optionally with
    jump discontinuities at listed nodes, where the stored value is the
    left limit and the right limit is extrapolated from the three following
    nodes.  Both are exactly invertible.
    """

    def __init__(self, axis: Grid1D, method: str = "filon", jumps: Sequence[float] = ()):
        if method not in ("dft", "filon"):
            raise ValueError(f"unknown transform method {method!r}")
        self.axis = axis
        self.freq = frequency_axis(axis)
        self.method = method
        n = axis.count
        w = self.freq.points
        self._w = w
        self._shift = n // 2
        self._modulate = np.exp(2j * math.pi * self._shift * np.arange(n) / n)
        self._phase = np.exp(-1j * w * axis.start)
        self._scale = axis.step / SQRT_2PI
        if method == "dft":
            self._weight = np.ones(n)
            self._B = np.zeros((n, 0), dtype=complex)
            self._C = np.zeros((0, n))
            return
        theta = w * axis.step
        weight = np.sinc(theta / (2.0 * math.pi)) ** 2
        e_right = _filon_end_weight(theta)
        e_left = np.conjugate(e_right)
        t = axis.points
        cols, rows = [], []

        def add(coef, node, combo):
            cols.append(coef * np.exp(-1j * w * t[node]))
            row = np.zeros(n)
            for idx, c in combo:
                row[idx] = c
            rows.append(row)

        add(e_right - weight, 0, [(0, 1.0)])
        add(e_left - weight, n - 1, [(n - 1, 1.0)])
        for b in jumps:
            m = axis.node_index(b)
            if m is None or m == 0 or m > n - 4:
                continue
            add(e_left - weight, m, [(m, 1.0)])
            add(e_right, m, [(m + 1, 3.0), (m + 2, -3.0), (m + 3, 1.0)])
        self._weight = weight
        self._B = np.stack(cols, axis=1)
        self._C = np.stack(rows, axis=0)
        # Woodbury capacitance for the low-rank edge and jump corrections.
        mb = self._apply_core_inverse(self._B)
        self._MinvB = mb
        self._cap = np.eye(self._B.shape[1]) + self._C @ mb

    def _apply_core(self, x):
        spec = np.fft.fft(x * self._modulate[:, None], axis=0)
        return (self._weight * self._phase)[:, None] * spec

    def _apply_core_inverse(self, y):
        spec = y / (self._weight * self._phase)[:, None]
        return np.conjugate(self._modulate)[:, None] * np.fft.ifft(spec, axis=0)

    def forward(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        x = np.moveaxis(np.asarray(values, dtype=complex), axis, 0)
        shape = x.shape
        x = x.reshape(shape[0], -1)
        out = self._apply_core(x)
        if self._B.shape[1]:
            out = out + self._B @ (self._C @ x)
        return np.moveaxis((self._scale * out).reshape(shape), 0, axis)

    def inverse(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        y = np.moveaxis(np.asarray(values, dtype=complex), axis, 0)
        shape = y.shape
        y = y.reshape(shape[0], -1) / self._scale
        x = self._apply_core_inverse(y)
        if self._B.shape[1]:
            x = x - self._MinvB @ np.linalg.solve(self._cap, self._C @ x)
        return np.moveaxis(x.reshape(shape), 0, axis)


def _cell_bump_transform(theta1: np.ndarray, theta2: np.ndarray, order: int = 20) -> np.ndarray:
    """``int_0^1 int_0^1 min(x, y) (1 - max(x, y)) exp(-i (theta1 x + theta2 y)) dx dy`` on a grid.

    The bump is the difference between the two-triangle linear interpolant of
    a unit cell (split along its main diagonal) and the bilinear one, per unit
    mixed difference of the corner values.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = (x + 1.0) / 2.0, w / 2.0
    # Lower triangle y <= x through y = x u; the upper one is its mirror.
    big = np.repeat(x, order)
    small = big * np.tile(x, order)
    weight = np.outer(w, w).ravel() * big * small * (1.0 - big)
    out = np.zeros((theta1.size, theta2.size), dtype=complex)
    for a, b in ((big, small), (small, big)):
        out += (np.exp(-1j * np.outer(theta1, a)) * weight) @ np.exp(-1j * np.outer(b, theta2))
    return out


class DiagonalKink:
    """Correction that makes the 2D interpolant piecewise linear on the cells along ``p1 = p2``.

    Fields built from ``exp(-a |p1 - p2|)`` have a crease along the diagonal.
    The bilinear interpolant smears it over every diagonal cell; splitting
    those cells into two triangles along the diagonal represents it exactly.
    The change of the interpolant is ``d_i * bump`` on cell ``i``, with ``d_i``
    the mixed difference of the cell's corner values, so its transform is a
    fixed cell weight times a one-dimensional sum along the diagonal.

    Corner values follow the same one-sided conventions as
    :class:`AxisTransform`: at a jump node the right limit is extrapolated
    from the three following nodes.
    """

    def __init__(self, axis: Grid1D, freq: Grid1D, jump_nodes: Sequence[int]):
        self.axis = axis
        self.jumps = set(jump_nodes)
        theta = freq.points * axis.step
        self._bump = _cell_bump_transform(theta, theta) * axis.step**2 / (2.0 * math.pi)
        n = axis.count
        sums = 2.0 * freq.start + freq.step * np.arange(2 * n - 1)
        self._sum_phase = np.exp(-1j * np.outer(sums, axis.points[:-1]))
        self._sum_index = np.add.outer(np.arange(n), np.arange(n))

    @staticmethod
    def _right(v, i, j, along):
        if along == 0:
            return 3.0 * v[i + 1, j] - 3.0 * v[i + 2, j] + v[i + 3, j]
        return 3.0 * v[i, j + 1] - 3.0 * v[i, j + 2] + v[i, j + 3]

    def mixed_differences(self, values: np.ndarray) -> np.ndarray:
        v = values
        i = np.arange(self.axis.count - 1)
        d = v[i, i] - v[i + 1, i] - v[i, i + 1] + v[i + 1, i + 1]
        for m in self.jumps:
            # Corner (m, m) takes right limits on both axes, (m, m+1) and
            # (m+1, m) on one.
            row = np.array([self._right(v, m, k, 0) for k in (m, m + 1, m + 2, m + 3)])
            f00 = 3.0 * row[1] - 3.0 * row[2] + row[3]
            f01 = row[1]
            f10 = self._right(v, m + 1, m, 1)
            d[m] = f00 - f10 - f01 + v[m + 1, m + 1]
        return d

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Transform of the interpolant change; add it to the tensor transform."""
        along = self._sum_phase @ self.mixed_differences(values)
        return self._bump * along[self._sum_index]


def _axis_transforms(grid: Grid2D, method: str, breakpoints: Sequence[float]):
    t1 = AxisTransform(grid.axis1, method, breakpoints)
    t2 = t1 if grid.axis2 == grid.axis1 else AxisTransform(grid.axis2, method, breakpoints)
    return t1, t2


def _kink_correction(grid: Grid2D, t1: "AxisTransform", method: str, breakpoints: Sequence[float]):
    if method != "filon" or not grid.is_square:
        return None
    nodes = [grid.axis1.node_index(b) for b in breakpoints]
    nodes = [m for m in nodes if m is not None and 0 < m <= grid.axis1.count - 4]
    return DiagonalKink(grid.axis1, t1.freq, nodes)


def transform2d(
    values,
    grid: Grid2D,
    *,
    method: str = "filon",
    breakpoints: Sequence[float] = (),
    diagonal_kink: bool = False,
):
    """Forward 2D transform with kernel ``(1/2pi) exp(-i(w1 p1 + w2 p2))``.

    With ``diagonal_kink`` (square grids, ``"filon"`` only) the cells along
    the diagonal are interpolated on two triangles, see :class:`DiagonalKink`.
    Returns the transformed array and the conjugate frequency grid.  An
    exchange-symmetric input on a square grid gives an exactly symmetric output.
    """
    t1, t2 = _axis_transforms(grid, method, breakpoints)
    out = t2.forward(t1.forward(values, axis=0), axis=1)
    kink = _kink_correction(grid, t1, method, breakpoints) if diagonal_kink else None
    if kink is not None:
        out = out + kink.forward(np.asarray(values, dtype=complex))
    if grid.is_square and np.array_equal(values, np.transpose(values)):
        # The two axis passes round differently.
        out = 0.5 * (out + out.T)
    return out, Grid2D(t1.freq, t2.freq)


def inverse_transform2d(
    values,
    time_grid: Grid2D,
    *,
    method: str = "filon",
    breakpoints: Sequence[float] = (),
    diagonal_kink: bool = False,
    tol: float = 1e-14,
    max_iter: int = 200,
):
    """Inverse of :func:`transform2d` for the given time grid.

    The tensor part is inverted exactly; the diagonal correction, when
    present, is removed by fixed-point iteration.

    Raises
    ------
    NoConvergence
        If the fixed-point iteration stalls.
    """
    t1, t2 = _axis_transforms(time_grid, method, breakpoints)
    values = np.asarray(values, dtype=complex)

    def tensor_inverse(y):
        return t1.inverse(t2.inverse(y, axis=1), axis=0)

    x = tensor_inverse(values)
    kink = _kink_correction(time_grid, t1, method, breakpoints) if diagonal_kink else None
    if kink is None:
        return x
    scale = max(np.max(np.abs(x)), np.finfo(float).tiny)
    for _ in range(max_iter):
        new = tensor_inverse(values - kink.forward(x))
        change = np.max(np.abs(new - x))
        x = new
        if change <= tol * scale:
            return x
    raise NoConvergence(f"diagonal-kink inverse did not converge (last change {change:.2e})")


def check_boundary_decay(values: np.ndarray, threshold: float = 1e-6) -> float:
    """Warn with :class:`BoundaryLeak` when the edge of a field is not small."""
    v = np.abs(values)
    peak = v.max() if v.size else 0.0
    edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()) if v.size else 0.0
    ratio = edge / peak if peak > 0 else 0.0
    if ratio > threshold:
        warnings.warn(
            BoundaryLeak(f"field at the grid boundary is {ratio:.2e} of its maximum"),
            stacklevel=3,
        )
    return ratio


def fourier2d(field, *, method: str = "filon"):
    """Transform a time-domain two-photon amplitude to the frequency domain.

    The frequency grid is the one conjugate to the time grid, so the transform
    can be inverted exactly by :func:`inverse_fourier2d`.  Jump lines listed in
    ``field.breakpoints`` are treated as discontinuities of the interpolant.

    Emits :class:`~tls2p.errors.BoundaryLeak` when the field has not decayed
    to 1e-6 of its maximum at the grid edge.
    """
    if field.domain != "time":
        raise ValueError("fourier2d expects a time-domain field")
    check_boundary_decay(field.values)
    values, freq_grid = transform2d(
        field.values, field.grid, method=method, breakpoints=field.breakpoints,
        diagonal_kink=getattr(field, "diagonal_kink", False),
    )
    return dataclasses.replace(field, grid=freq_grid, values=values, domain="frequency", norm_sq=None)


def inverse_fourier2d(field, time_grid: Grid2D, *, method: str = "filon", breakpoints: Sequence[float] | None = None):
    """Invert :func:`fourier2d` given the time grid of the original field.

    Jump lines and the diagonal-kink flag default to those carried by
    ``field`` (which :func:`fourier2d` preserves).
    """
    if field.domain != "frequency":
        raise ValueError("inverse_fourier2d expects a frequency-domain field")
    if breakpoints is None:
        breakpoints = getattr(field, "breakpoints", ())
    values = inverse_transform2d(
        field.values, time_grid, method=method, breakpoints=breakpoints,
        diagonal_kink=getattr(field, "diagonal_kink", False),
    )
    return dataclasses.replace(
        field, grid=time_grid, values=values, domain="time", breakpoints=tuple(breakpoints), norm_sq=None
    )


def grid_integral(values: np.ndarray, grid: Grid2D, breakpoints: Sequence[float] = ()) -> complex:
    """Trapezoid rule on a 2D grid with one-sided handling of jump lines.

    At a listed break point the stored node value is taken as the left limit
    and the right limit is extrapolated from the following three nodes.
    """

    def along(v, axis: Grid1D):
        w = np.full(axis.count, 1.0)
        w[0] = w[-1] = 0.5
        out = np.tensordot(w, v, axes=(0, 0))
        for b in breakpoints:
            m = axis.node_index(b)
            if m is None or m == 0 or m > axis.count - 4:
                continue
            right = 3.0 * v[m + 1] - 3.0 * v[m + 2] + v[m + 3]
            out = out - 0.5 * v[m] + 0.5 * right
        return axis.step * out

    return complex(along(along(np.asarray(values), grid.axis1), grid.axis2))
