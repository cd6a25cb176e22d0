"""Named end-to-end checks shared by the test suite and ``tls2p`` validate mode.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison, so a runner can report every outcome.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BoundaryLeak
from .lti_response import (
    EmitterParams,
    TwoChannelParams,
    absorbed_energy,
    convolve_scalar,
    default_time_axis,
)
from .numerics import Grid1D, Grid2D, fourier2d
from .one_channel import OneChannelScattering, default_grid, eta_freq, eta_time, lemma_oracle, time_density
from .pulse_shapes import Gaussian, RisingExp, TwoPhotonInput
from .two_channel import (
    T_ij_freq,
    TwoChannelScattering,
    appendix_oracle,
    eta_ij_time,
    hom_difference,
)
from .two_channel import default_grid as two_channel_grid

__all__ = ["CheckResult", "CHECKS", "BUDGETS", "run_checks", "diagonal_peak_count", "local_maxima_1d"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f} s)"


def local_maxima_1d(values: np.ndarray, floor: float = 1e-3) -> np.ndarray:
    """Indices of strict interior local maxima above ``floor * max``."""
    v = np.asarray(values, dtype=float)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]) & (v[1:-1] > floor * v.max())
    return np.nonzero(inner)[0] + 1


def diagonal_peak_count(density: np.ndarray) -> int:
    """Number of local maxima of a density along ``p1 = p2``."""
    return int(local_maxima_1d(np.diag(density)).size)


def _timed(fn: Callable[[], CheckResult]) -> Callable[[], CheckResult]:
    def run() -> CheckResult:
        start = time.perf_counter()
        result = fn()
        result.seconds = time.perf_counter() - start
        return result

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ---------------------------------------------------------------------------
# Single photon
# ---------------------------------------------------------------------------


@_timed
def single_photon_benchmark() -> CheckResult:
    """Gaussian bandwidth 1.46, centre 3, kappa 1: energy held up to t = 4 is 0.8 +- 0.01."""
    value = absorbed_energy(EmitterParams(1.0), Gaussian(1.46, 3.0), 4.0)
    return CheckResult("single_photon_benchmark", abs(value - 0.8) <= 0.01,
                       f"absorbed_by_t4 = {value:.6f} (target 0.8 +- 0.01)", values={"absorbed": value})


@_timed
def perfect_absorption() -> CheckResult:
    """Rising exponential matched to the emitter: nothing leaves before 0, pure decay after."""
    worst_before = worst_after = 0.0
    for kappa in (0.5, 1.0, 3.0):
        pulse = RisingExp(kappa)
        axis = default_time_axis([pulse], kappa, 4096)
        nu = convolve_scalar(EmitterParams(kappa), pulse, axis)
        t = axis.points
        before = t <= 0
        worst_before = max(worst_before, float(np.max(np.abs(nu[before]))))
        exact = math.sqrt(kappa) * np.exp(-kappa * t[~before] / 2)
        worst_after = max(worst_after, float(np.max(np.abs(nu[~before] - exact))))
    ok = worst_before <= 1e-6 and worst_after <= 1e-6
    return CheckResult("perfect_absorption", ok,
                       f"max|nu| for t<=0 {worst_before:.2e}, max deviation for t>0 {worst_after:.2e} (limit 1e-6)")


# ---------------------------------------------------------------------------
# One channel
# ---------------------------------------------------------------------------

UNITARITY_CASES = (
    (1.0, Gaussian(1.46)),
    (1.0, Gaussian(2.92)),
    (1.0, Gaussian(4.38)),
    (0.1, RisingExp(0.1)),
    (0.5, RisingExp(0.1)),
    (10.0, RisingExp(0.1)),
)


@_timed
def one_channel_unitarity() -> CheckResult:
    """Plane integral of |eta|^2 equals 2 N2 for the Fock configurations of the figures, at 512^2."""
    worst = 0.0
    parts = []
    for kappa, pulse in UNITARITY_CASES:
        params, inp = EmitterParams(kappa), TwoPhotonInput.fock(pulse)
        amp = eta_time(params, inp, default_grid(params, inp, 512), profile="figure")
        rel = abs(amp.norm_sq - 2 * amp.n2) / (2 * amp.n2)
        worst = max(worst, rel)
        parts.append(f"{pulse}/kappa={kappa:g}: {amp.norm_sq:.6f} (grid {amp.grid_norm_sq():.4f})")
    return CheckResult("one_channel_unitarity", worst <= 1e-3,
                       f"worst relative deviation {worst:.2e} (limit 1e-3); " + "; ".join(parts))


def _oracle_points(rng, sc: OneChannelScattering, count: int, window: tuple[float, float]):
    """Random points where the amplitude is not negligible."""
    lo, hi = window
    probe = rng.uniform(lo, hi, size=(400, 2))
    vals = np.abs(sc.eta(probe[:, 0], probe[:, 1]))
    keep = probe[vals > 1e-3 * vals.max()]
    return keep[:count]


@_timed
def one_channel_oracle() -> CheckResult:
    """Nested-quadrature oracle agrees with the closed form at 27 random points in 3 configurations."""
    rng = np.random.default_rng(20240601)
    configs = [
        (EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(1.46)), (-3.0, 5.0)),
        (EmitterParams(1.0, 0.4), TwoPhotonInput.fock(RisingExp(0.5)), (-8.0, 4.0)),
        (EmitterParams(0.8, -0.3), TwoPhotonInput(Gaussian(2.0), Gaussian(1.0, 0.7)), (-3.0, 5.0)),
    ]
    worst, n = 0.0, 0
    for params, inp, window in configs:
        sc = OneChannelScattering(params, inp)
        for p1, p2 in _oracle_points(rng, sc, 9, window):
            closed = complex(sc.eta(p1, p2))
            oracle = lemma_oracle(params, inp, p1, p2)
            worst = max(worst, abs(oracle - closed) / abs(closed))
            n += 1
    ok = n >= 25 and worst <= 1e-6
    return CheckResult("one_channel_oracle", ok, f"{n} points, worst relative error {worst:.2e} (limit 1e-6)")


@_timed
def one_channel_fourier() -> CheckResult:
    """Transformed time-domain amplitude matches the frequency-domain formula at 256^2."""
    params, inp = EmitterParams(0.5), TwoPhotonInput.fock(RisingExp(0.1))
    amp = eta_time(params, inp, default_grid(params, inp, 256))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryLeak)
        spec = fourier2d(amp)
    ref = eta_freq(params, inp, spec.grid)
    rel = float(np.linalg.norm(spec.values - ref.values) / np.linalg.norm(ref.values))
    return CheckResult("one_channel_fourier", rel <= 1e-2, f"relative L2 difference {rel:.2e} (limit 1e-2)")


@_timed
def diagonal_peaks() -> CheckResult:
    """Fock Gaussian: two density maxima on the diagonal at bandwidth 2.92 kappa, one at 1.46 kappa."""
    counts = {}
    for omega in (2.92, 1.46):
        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(omega))
        amp = eta_time(params, inp, default_grid(params, inp, 512), profile="figure")
        counts[omega] = diagonal_peak_count(time_density(amp, "paper_fock"))
    ok = counts[2.92] == 2 and counts[1.46] == 1
    return CheckResult("diagonal_peaks", ok,
                       f"peaks at bandwidth 2.92: {counts[2.92]} (want 2), at 1.46: {counts[1.46]} (want 1)")


def _spectral_maximum(kappa: float, axis: Grid1D):
    params, inp = EmitterParams(kappa), TwoPhotonInput.fock(RisingExp(0.1))
    spec = eta_freq(params, inp, Grid2D.square(axis))
    mag = np.abs(spec.values) ** 2
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    w = axis.points
    return w[i], w[j]


@_timed
def spectral_anticorrelation() -> CheckResult:
    """Rising exponential, width 0.1: joint spectrum peaks off-origin on w1 + w2 = 0 at kappa 0.5, at the origin for 0.1 and 10."""
    axis = Grid1D.from_range(-1.0, 1.0, 201)
    step = axis.step
    w1, w2 = _spectral_maximum(0.5, axis)
    off = math.hypot(w1, w2) > step and abs(w1 + w2) <= step * (1 + 1e-9)
    centred = {}
    for kappa in (0.1, 10.0):
        a, b = _spectral_maximum(kappa, axis)
        centred[kappa] = max(abs(a), abs(b)) <= step * (1 + 1e-9)
    ok = off and all(centred.values())
    return CheckResult("spectral_anticorrelation", ok,
                       f"kappa 0.5 maximum at ({w1:+.3f}, {w2:+.3f}); "
                       f"origin maxima at kappa 0.1: {centred[0.1]}, kappa 10: {centred[10.0]}")


# ---------------------------------------------------------------------------
# Two channels
# ---------------------------------------------------------------------------


@_timed
def two_channel_conservation() -> CheckResult:
    """P11 + P12 + P22 = 1 for a rising exponential of width 0.1 and kappa in {0.01, 0.1, 0.5}."""
    worst = 0.0
    parts = []
    for kappa in (0.01, 0.1, 0.5):
        sc = TwoChannelScattering(TwoChannelParams.equal(kappa), TwoPhotonInput.fock(RisingExp(0.1)))
        probs = sc.probabilities()
        worst = max(worst, abs(sum(probs) - 1.0))
        parts.append(f"kappa={kappa:g}: " + ", ".join(f"{p:.4f}" for p in probs))
    return CheckResult("two_channel_conservation", worst <= 1e-3,
                       f"worst |sum - 1| {worst:.2e} (limit 1e-3); " + "; ".join(parts))


@_timed
def split_quadrant_vanishes() -> CheckResult:
    """Rising-exponential inputs: the split-channel amplitude vanishes when both photons leave after 0."""
    worst = 0.0
    for gamma, kappa in ((1.0, 1.0), (0.1, 0.01), (0.1, 0.1), (0.1, 0.5)):
        params, inp = TwoChannelParams.equal(kappa), TwoPhotonInput.fock(RisingExp(gamma))
        field_ = eta_ij_time(params, inp, two_channel_grid(params, inp, 512))
        t = field_.grid.axis1.points
        late = t > 0
        worst = max(worst, float(np.max(np.abs(field_.eta12[np.ix_(late, late)]))))
    return CheckResult("split_quadrant_vanishes", worst <= 1e-8, f"max |A12| for p1, p2 > 0: {worst:.2e} (limit 1e-8)")


@_timed
def hom_structure() -> CheckResult:
    """HOM difference: positive all along w1 + w2 = 0 at kappa 0.1, only near the origin at kappa 0.01."""
    axis = Grid1D.from_range(-0.5, 0.5, 201)
    grid = Grid2D.square(axis)
    w = axis.points
    anti = {}
    for kappa in (0.1, 0.01):
        spec = T_ij_freq(TwoChannelParams.equal(kappa), TwoPhotonInput.fock(RisingExp(0.1)), grid)
        hom = hom_difference(spec)
        anti[kappa] = hom[np.arange(w.size), np.arange(w.size)[::-1]]
    strong = bool(np.all(anti[0.1] > 0))
    pos = anti[0.01] > 0
    reach = float(np.max(np.abs(w[pos]))) if pos.any() else float("nan")
    # Positive on a single contiguous stretch through the origin, narrower than the pulse bandwidth.
    idx = np.nonzero(pos)[0]
    contiguous = idx.size > 0 and np.all(np.diff(idx) == 1) and pos[w.size // 2]
    weak = bool(contiguous and reach <= 0.05)
    return CheckResult("hom_structure", strong and weak,
                       f"kappa 0.1 positive on the whole anti-diagonal: {strong}; "
                       f"kappa 0.01 positive for |w| <= {reach:.3f} only (limit 0.05): {weak}")


@_timed
def two_channel_oracle() -> CheckResult:
    """Appendix-style oracle matches the closed form at 12 points; fast and general paths agree."""
    params, inp = TwoChannelParams.equal(1.0), TwoPhotonInput.fock(RisingExp(1.0))
    sc = TwoChannelScattering(params, inp)
    points = [(0.3, -0.5), (-1.0, -0.2), (-0.4, -0.4), (0.5, -2.0), (-2.5, -0.7), (1.2, -0.1)]
    worst, n = 0.0, 0
    for p1, p2 in points:
        for (i, j), name in (((1, 1), "11"), ((1, 2), "12")):
            closed = complex(sc.amplitude(name, p1, p2))
            oracle = appendix_oracle(params, inp, i, j, p1, p2)
            worst = max(worst, abs(oracle - closed) / abs(closed))
            n += 1
    grid = Grid2D.square(default_time_axis(inp.pulses, params.total, 256))
    fast = sc.sample(grid, "equal")
    general = sc.sample(grid, "general")
    paths = max(float(np.max(np.abs(a - b))) for a, b in zip(fast, general))
    ok = n >= 9 and worst <= 1e-5 and paths <= 1e-10
    return CheckResult("two_channel_oracle", ok,
                       f"{n} points, worst relative error {worst:.2e} (limit 1e-5); "
                       f"equal vs general path {paths:.2e} (limit 1e-10)")


@_timed
def spectral_exchange_symmetry() -> CheckResult:
    """T_ij[w1, w2] = T_ij[w2, w1] on a 64^2 grid (equal coupling, identical pulses)."""
    grid = Grid2D.square(Grid1D.from_range(-0.6, 0.6, 64))
    spec = T_ij_freq(TwoChannelParams.equal(0.1), TwoPhotonInput.fock(RisingExp(0.1)), grid)
    errors = spec.symmetry_errors()
    worst = max(errors.values())
    return CheckResult("spectral_exchange_symmetry", worst <= 1e-6,
                       "max asymmetry " + ", ".join(f"T{k} {v:.1e}" for k, v in errors.items()) + " (limit 1e-6)")


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "single_photon_benchmark": single_photon_benchmark,
    "perfect_absorption": perfect_absorption,
    "one_channel_unitarity": one_channel_unitarity,
    "one_channel_oracle": one_channel_oracle,
    "one_channel_fourier": one_channel_fourier,
    "diagonal_peaks": diagonal_peaks,
    "spectral_anticorrelation": spectral_anticorrelation,
    "two_channel_conservation": two_channel_conservation,
    "split_quadrant_vanishes": split_quadrant_vanishes,
    "hom_structure": hom_structure,
    "two_channel_oracle": two_channel_oracle,
    "spectral_exchange_symmetry": spectral_exchange_symmetry,
}


# Wall-clock limits in seconds; a check that overruns fails.
BUDGETS: dict[str, float] = {
    "single_photon_benchmark": 1.0,
    "perfect_absorption": 1.0,
    "one_channel_unitarity": 30.0,
    "one_channel_oracle": 120.0,
    "one_channel_fourier": 60.0,
}


def run_checks(names=None) -> list[CheckResult]:
    """Run the named checks (all by default) in order, enforcing :data:`BUDGETS`."""
    names = list(CHECKS) if names is None else list(names)
    results = []
    for name in names:
        result = CHECKS[name]()
        budget = BUDGETS.get(name)
        if budget is not None and result.seconds > budget:
            result.passed = False
            result.detail += f"; took {result.seconds:.2f} s, budget {budget:g} s"
        results.append(result)
    return results
