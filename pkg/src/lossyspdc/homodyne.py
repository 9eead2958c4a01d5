"""Homodyne observables of a multimode Gaussian state.

A local-oscillator mode ``phi(w)`` measures the quadrature

    x = 2^-1/2 integral dw [phi*(w) a(w) + phi(w) a^dag(w)]

whose variance is ``1/2 + Phi^T M Phi`` with ``Phi = [Re phi; Im phi]`` and a
real symmetric ``2N x 2N`` matrix ``M`` assembled from the frequency-domain
CFs.  Eigenvectors of ``M`` are mutually uncorrelated quadratures; the one
with the lowest eigenvalue is the most squeezed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import CFState, Domain, PhysicalParams, SimGrid, cf_to_frequency

STRUCTURE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class QuadFormM:
    """Quadratic form of the quadrature variance, ``dw`` weight folded in."""

    m: np.ndarray
    dw: float

    @property
    def n(self) -> int:
        return self.m.shape[0] // 2

    def variance(self, phi: np.ndarray) -> float:
        """Variance of the quadrature defined by a (normalized) mode function."""
        v = np.concatenate([phi.real, phi.imag]) * math.sqrt(self.dw)
        return 0.5 + float(v @ self.m @ v)


@dataclass(frozen=True, eq=False)
class QuadratureMode:
    eigenvalue: float
    phi: np.ndarray
    variance: float
    conj_variance: float

    @property
    def uncertainty_product(self) -> float:
        return self.variance * self.conj_variance


@dataclass(frozen=True)
class TraceRow:
    z: float
    mean_photons: float
    min_variance: float
    conj_variance_of_min: float
    uncertainty_product: float

    FIELDS = ("z", "mean_photons", "min_variance", "conj_variance", "uncertainty_product")

    def as_tuple(self) -> tuple:
        return (self.z, self.mean_photons, self.min_variance, self.conj_variance_of_min,
                self.uncertainty_product)


def _frequency(state: CFState, grid: SimGrid) -> CFState:
    return state if state.domain is Domain.FREQUENCY else cf_to_frequency(state, grid)


def build_quadratic_form(state: CFState, grid: SimGrid, tol: float = STRUCTURE_TOL) -> QuadFormM:
    """Assemble ``M`` from frequency-domain ``g`` (Hermitian) and ``f`` (symmetric).

    Blocks, with ``phi = u + i v``::

        [[Re g + Re f,   Im g + Im f],
         [Im f - Im g,   Re g - Re f]]

    ``u^T Im(g) v`` terms pair up because ``Im g`` is antisymmetric, and the
    whole matrix is symmetrized explicitly to remove rounding asymmetry.
    """
    if state.domain is not Domain.FREQUENCY:
        raise ValueError("build_quadratic_form needs a frequency-domain state")
    err = state.structure_error()
    if err["hermitian"] > tol or err["symmetric"] > tol:
        raise ValueError(f"state violates CF structure beyond {tol:g}: {err}")
    g, f = state.g, state.f
    gr, gi = g.real, g.imag
    fr, fi = f.real, f.imag
    m = np.block([[gr + fr, gi + fi], [fi - gi, gr - fr]])
    m = 0.5 * (m + m.T) * grid.dw
    return QuadFormM(m=m, dw=grid.dw)


def _mode_from_vector(vec: np.ndarray, mform: QuadFormM, eigenvalue: float) -> QuadratureMode:
    n = mform.n
    vec = vec / np.linalg.norm(vec)
    conj = np.concatenate([-vec[n:], vec[:n]])
    variance = 0.5 + float(vec @ mform.m @ vec)
    conj_variance = 0.5 + float(conj @ mform.m @ conj)
    phi = (vec[:n] + 1j * vec[n:]) / math.sqrt(mform.dw)
    return QuadratureMode(eigenvalue=float(eigenvalue), phi=phi, variance=variance,
                          conj_variance=conj_variance)


def quadrature_spectrum(mform: QuadFormM, grid: SimGrid | None = None, k: int | None = None) -> list[QuadratureMode]:
    """The ``k`` lowest-eigenvalue quadratures of ``M`` (all ``2N`` when ``k`` is None)."""
    size = mform.m.shape[0]
    k = size if k is None else int(k)
    if not 1 <= k <= size:
        raise ValueError(f"k must lie in [1, {size}], got {k}")
    vals, vecs = scipy.linalg.eigh(mform.m, subset_by_index=[0, k - 1])
    return [_mode_from_vector(vecs[:, i], mform, vals[i]) for i in range(k)]


def max_variance(mform: QuadFormM) -> float:
    """Largest variance over all quadratures (the most antisqueezed one)."""
    size = mform.m.shape[0]
    top = scipy.linalg.eigh(mform.m, eigvals_only=True, subset_by_index=[size - 1, size - 1])
    return 0.5 + float(top[0])


def most_squeezed_mode(state: CFState, grid: SimGrid) -> QuadratureMode:
    return quadrature_spectrum(build_quadratic_form(_frequency(state, grid), grid), grid, k=1)[0]


def mean_photon_number(state: CFState, grid: SimGrid) -> float:
    """``<n> = integral dw g(w, w)``; the trace is the same in either domain."""
    d = np.trace(state.g)
    scale = grid.dw if state.domain is Domain.FREQUENCY else grid.dt
    return float(d.real * scale)


def trace_quantities(state: CFState, grid: SimGrid) -> TraceRow:
    state = _frequency(state, grid)
    mode = most_squeezed_mode(state, grid)
    return TraceRow(
        z=float(state.z),
        mean_photons=mean_photon_number(state, grid),
        min_variance=mode.variance,
        conj_variance_of_min=mode.conj_variance,
        uncertainty_product=mode.uncertainty_product,
    )


def cross_correlations(mform: QuadFormM, modes: list[QuadratureMode]) -> np.ndarray:
    """Matrix of ``<x_i x_j> - delta_ij / 2 = Phi_i^T M Phi_j`` for the given modes."""
    sq = math.sqrt(mform.dw)
    vecs = np.stack([np.concatenate([md.phi.real, md.phi.imag]) * sq for md in modes], axis=1)
    return vecs.T @ mform.m @ vecs


def pair_conjugate_modes(modes: list[QuadratureMode], dw: float, threshold: float = 0.99) -> list[tuple[int, int | None]]:
    """Group quadratures that measure the same mode at conjugate phases.

    Two quadratures belong together when their mode functions overlap with
    ``|<phi_i|phi_j>| > threshold``; each mode is used at most once.
    Unpaired quadratures come back as ``(i, None)``.
    """
    used: set[int] = set()
    groups: list[tuple[int, int | None]] = []
    for i, mi in enumerate(modes):
        if i in used:
            continue
        used.add(i)
        partner = None
        for j in range(i + 1, len(modes)):
            if j in used:
                continue
            overlap = abs(np.vdot(mi.phi, modes[j].phi)) * dw
            if overlap > threshold:
                partner = j
                used.add(j)
                break
        groups.append((i, partner))
    return groups


SETTLE_FRACTION = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class StageReport:
    """Boundaries found by :func:`stage_classifier` (``None`` when a stage is absent).

    ``overlap_ratio`` and ``attenuation_ratio`` are the boundaries in units of
    ``L_OV`` and ``L_A`` when parameters were supplied and the length is finite.
    """

    stages: tuple[str, ...]
    linear_onset: float | None
    plateau_onset: float | None
    overlap_ratio: float | None = None
    attenuation_ratio: float | None = None


def _settle_point(z: np.ndarray, y: np.ndarray, plateau_slope: float) -> float | None:
    """Distance at which ``y`` has covered ``1 - 1/e`` of its total change.

    Returns None unless ``y`` has actually levelled off by the end of the
    trace, i.e. its final slope is below ``plateau_slope`` times the largest.
    """
    change = y[-1] - y[0]
    slope = np.abs(np.gradient(y, z))
    if change == 0.0 or not slope.max() > 0.0 or slope[-1] >= plateau_slope * slope.max():
        return None
    progress = (y - y[0]) / change
    k = int(np.argmax(progress >= SETTLE_FRACTION))
    if k == 0:
        return float(z[0])
    frac = (SETTLE_FRACTION - progress[k - 1]) / (progress[k] - progress[k - 1])
    return float(z[k - 1] + frac * (z[k] - z[k - 1]))


def stage_classifier(trace: list[TraceRow], params: PhysicalParams | None = None,
                     plateau_slope: float = 1e-2) -> StageReport:
    """Split a propagation history into nonlinear, linear and stationary stages.

    In the nonlinear stage the most squeezed mode is still being built up,
    so its variance and that of its conjugate quadrature keep changing.  Once
    the pump has walked off, that mode freezes while similar modes keep being
    generated, so ``<n>`` still grows, roughly linearly.  Losses finally stop
    ``<n>`` as well.

    A quantity counts as settled when its slope at the end of the trace is
    below ``plateau_slope`` of its maximum; its settling distance is where it
    has covered ``1 - 1/e`` of its total change.  The linear stage starts
    where the most squeezed mode settles (the later of its two variances)
    and is reported only if ``<n>`` at least doubles afterwards, i.e. at least
    as many photons arrive after the mode has frozen as before.  The
    stationary stage starts where ``<n>`` settles.  In a single-mode lossy
    amplifier photon number and mode settle together, so no linear stage is
    found; in a lossless exponential amplifier nothing settles.
    """
    rows = sorted(trace, key=lambda r: r.z)
    if len(rows) < 5:
        return StageReport(stages=("nonlinear",), linear_onset=None, plateau_onset=None)
    z = np.array([r.z for r in rows])
    n = np.array([r.mean_photons for r in rows])
    v = np.array([r.min_variance for r in rows])
    c = np.array([r.conj_variance_of_min for r in rows])

    z_v = _settle_point(z, v, plateau_slope)
    z_c = _settle_point(z, c, plateau_slope)
    z_mode = None if z_v is None or z_c is None else max(z_v, z_c)
    z_n = _settle_point(z, n, plateau_slope)

    linear_onset = None
    if z_mode is not None:
        n_mode = float(np.interp(z_mode, z, n))
        n_end = float(np.interp(z_n, z, n)) if z_n is not None else float(n[-1])
        if z_n is None or z_n > z_mode:
            if n_end >= 2.0 * n_mode:
                linear_onset = z_mode

    stages = ["nonlinear"]
    if linear_onset is not None:
        stages.append("linear")
    if z_n is not None:
        stages.append("stationary")

    overlap_ratio = attenuation_ratio = None
    if params is not None:
        if linear_onset is not None and math.isfinite(params.l_ov):
            overlap_ratio = linear_onset / params.l_ov
        if z_n is not None and math.isfinite(params.l_a):
            attenuation_ratio = z_n / params.l_a
    return StageReport(stages=tuple(stages), linear_onset=linear_onset, plateau_onset=z_n,
                       overlap_ratio=overlap_ratio, attenuation_ratio=attenuation_ratio)
