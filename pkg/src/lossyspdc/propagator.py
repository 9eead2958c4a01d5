"""Split-step propagation of the correlation functions along the crystal.

One step of length ``h`` is the symmetric composition

    half linear (frequency) -> transform -> coupling + loss (time)
    -> transform -> half linear (frequency)

The linear factor ``exp(L(w) h/2)`` with ``L(w) = i(tau w/L_OV + tau^2 w^2/(2 L_D))``
is applied exactly.  The time-domain part is local in ``(t, t')`` and, with
the pump frozen at mid-step, linear with constant coefficients per cell, so
:func:`lossyspdc.kernels.couple` integrates it exactly including the
diagonal seed ``P(t) delta(t - t')/L_NL`` and the ``-1/L_A`` attenuation.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (CFState, Domain, PhysicalParams, PumpEnvelope, SimGrid, build_grid,
                   build_pump, f_freq_to_time, f_time_to_freq, g_freq_to_time, g_time_to_freq)
from .homodyne import TraceRow, trace_quantities

log = logging.getLogger(__name__)

EDGE_BAND = 0.05
EDGE_TOL = 1e-3


class SupportError(RuntimeError):
    """The CFs reached the edge of the periodic time window."""

    def __init__(self, z: float, fraction: float, band: float):
        self.z = z
        self.fraction = fraction
        super().__init__(
            f"|f|^2 fraction {fraction:.3g} with pair mean time in the outer {2 * band:.0%} of the window "
            f"at z={z:.6g}; enlarge the window"
        )


@dataclass(frozen=True)
class StepPlan:
    dz: float
    n_steps: int
    snapshot_zs: tuple[float, ...] = ()
    trace_every: int = 1

    @property
    def l_total(self) -> float:
        return self.dz * self.n_steps

    def snapshot_steps(self) -> dict[int, float]:
        """Map step index -> requested z, each requested z rounded to the nearest step."""
        out = {}
        for z in self.snapshot_zs:
            k = int(round(z / self.dz)) if self.dz > 0 else 0
            out[min(max(k, 0), self.n_steps)] = z
        return out


def make_plan(l_total: float, dz: float, snapshot_zs=(), trace_every: int = 1) -> StepPlan:
    """Plan with an integer step count; ``dz`` is shrunk to land on ``l_total``."""
    if not dz > 0.0:
        raise ValueError("dz must be positive")
    if trace_every < 1:
        raise ValueError("trace_every must be >= 1")
    for z in snapshot_zs:
        if z < 0.0 or z > l_total * (1 + 1e-12):
            raise ValueError(f"snapshot z={z} outside [0, {l_total}]")
    if l_total == 0.0:
        return StepPlan(dz=dz, n_steps=0, snapshot_zs=tuple(snapshot_zs), trace_every=trace_every)
    n_steps = max(1, int(math.ceil(l_total / dz - 1e-9)))
    return StepPlan(dz=l_total / n_steps, n_steps=n_steps, snapshot_zs=tuple(snapshot_zs),
                    trace_every=trace_every)


def auto_dz(params: PhysicalParams) -> float:
    scales = [params.l_nl, params.l_a, params.l_ov, params.l_d]
    if params.pump_damping is not None:
        scales.append(params.pump_damping)
    return min(scales) / 200.0


def linear_phase(grid: SimGrid, params: PhysicalParams, h: float) -> np.ndarray:
    """``exp(L(w) h)`` on the frequency axis."""
    w = grid.w_axis
    tau = params.tau_p
    lin = tau * w * params.rate_ov + 0.5 * (tau * w) ** 2 * params.rate_d
    return np.exp(1j * lin * h)


def _require(state: CFState, domain: Domain, op: str):
    if state.domain is not domain:
        raise ValueError(f"{op} needs a {domain.value}-domain state, got {state.domain.value}")


def linear_half_step(state: CFState, grid: SimGrid, params: PhysicalParams, dz: float) -> CFState:
    """Dispersion and walk-off over ``dz/2`` (a pure phase on ``g``)."""
    _require(state, Domain.FREQUENCY, "linear_half_step")
    g, f = state.g.copy(), state.f.copy()
    kernels.apply_phase(g, f, linear_phase(grid, params, dz / 2.0))
    return CFState(g, f, Domain.FREQUENCY, state.z)


class _Coupler:
    """Per-step constants of the time-domain coupling, cached for a fixed pump."""

    def __init__(self, grid: SimGrid, pump: PumpEnvelope, params: PhysicalParams):
        p = np.asarray(pump.temporal)
        if np.abs(p.imag).max() > 1e-9 * max(np.abs(p).max(), 1.0):
            raise ValueError("pump must be real in the time domain")
        self.p = np.ascontiguousarray(p.real)
        self.grid = grid
        self.params = params
        self._cache = None

    def constants(self, h: float, scale: float):
        key = (h, scale)
        if self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        params = self.params
        rate = params.rate_nl * scale
        ph = self.p * rate * h
        grow = np.exp(ph)
        shrink = np.exp(-ph)
        gamma = params.rate_a
        decay = math.exp(-gamma * h)
        seed = self.p * rate / self.grid.dt
        lam_plus = (2.0 * self.p * rate - gamma) * h
        lam_minus = (-2.0 * self.p * rate - gamma) * h
        src_plus = seed * h * kernels.exprel(lam_plus)
        src_minus = seed * h * kernels.exprel(lam_minus)
        consts = (grow, shrink, decay, src_plus, src_minus)
        self._cache = (key, consts)
        return consts

    def apply(self, g: np.ndarray, f: np.ndarray, h: float, z_mid: float):
        kernels.couple(g, f, *self.constants(h, self.params.pump_scale(z_mid)))


def nonlinear_step(state: CFState, grid: SimGrid, pump: PumpEnvelope, params: PhysicalParams,
                   dz: float, z: float) -> CFState:
    """Pump coupling, seeding and attenuation over ``[z, z + dz]`` in the time domain.

    With pump damping on, the pump is frozen at ``exp(-(z + dz/2)/L_A^P)``.
    """
    _require(state, Domain.TIME, "nonlinear_step")
    g, f = state.g.copy(), state.f.copy()
    _Coupler(grid, pump, params).apply(g, f, dz, z + dz / 2.0)
    return CFState(g, f, Domain.TIME, state.z + dz)


@dataclass
class EvolveResult:
    final: CFState
    snapshots: list[CFState]
    trace: list[TraceRow]
    wall_time: float = 0.0
    max_edge_fraction: float = 0.0
    structure: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.final, self.snapshots, self.trace))


def evolve(params: PhysicalParams, grid: SimGrid, plan: StepPlan, pump: PumpEnvelope | None = None,
           edge_tol: float | None = EDGE_TOL, record_trace: bool = True) -> EvolveResult:
    """Propagate from vacuum through ``plan.n_steps`` Strang steps.

    Snapshots are frequency-domain :class:`CFState` copies; trace rows are
    recorded at ``z = 0``, every ``plan.trace_every`` steps and at the end.
    ``edge_tol=None`` disables the window-edge monitor (needed for a flat
    pump, which fills the window by design).  Unpacks as
    ``final, snapshots, trace``.
    """
    t0 = time.perf_counter()
    pump = build_pump(grid, params) if pump is None else pump
    n = grid.n
    g = np.zeros((n, n), dtype=complex)
    f = np.zeros((n, n), dtype=complex)
    h = plan.dz
    half = linear_phase(grid, params, h / 2.0)
    coupler = _Coupler(grid, pump, params)
    band = max(1, int(round(EDGE_BAND * n)))
    snap_steps = plan.snapshot_steps()
    snapshots: list[CFState] = []
    trace: list[TraceRow] = []
    max_edge = 0.0

    def record(step: int):
        z = step * h
        if record_trace and (step % plan.trace_every == 0 or step == plan.n_steps):
            trace.append(trace_quantities(CFState(g.copy(), f.copy(), Domain.FREQUENCY, z), grid))
        if step in snap_steps:
            snapshots.append(CFState(g.copy(), f.copy(), Domain.FREQUENCY, z))

    record(0)
    for step in range(plan.n_steps):
        z = step * h
        kernels.apply_phase(g, f, half)
        gt = g_freq_to_time(g, grid)
        ft = f_freq_to_time(f, grid)
        coupler.apply(gt, ft, h, z + h / 2.0)
        if edge_tol is not None and ((step + 1) % plan.trace_every == 0 or step + 1 == plan.n_steps):
            frac = kernels.edge_fraction(ft, band)
            max_edge = max(max_edge, frac)
            if frac > edge_tol:
                raise SupportError(z + h, frac, EDGE_BAND)
        g = g_time_to_freq(gt, grid)
        f = f_time_to_freq(ft, grid)
        kernels.apply_phase(g, f, half)
        record(step + 1)

    final = CFState(g, f, Domain.FREQUENCY, plan.n_steps * h)
    wall = time.perf_counter() - t0
    log.debug("evolve: %d steps on n=%d in %.2fs", plan.n_steps, n, wall)
    return EvolveResult(final=final, snapshots=snapshots, trace=trace, wall_time=wall,
                        max_edge_fraction=max_edge, structure=final.structure_error())


# ---------------------------------------------------------------------------
# shape diagnostics of time-domain CFs
# ---------------------------------------------------------------------------

def _wrapped_offsets(n: int) -> np.ndarray:
    k = np.arange(n)
    return (k[:, None] - k[None, :] + n // 2) % n - n // 2


def antidiagonal_rms_width(f_time: np.ndarray, grid: SimGrid) -> float:
    """RMS of ``t - t'`` weighted by ``|f|^2``, with ``t - t'`` wrapped onto the periodic window."""
    w = np.abs(f_time) ** 2
    s = _wrapped_offsets(grid.n) * grid.dt
    return math.sqrt(float((s * s * w).sum() / w.sum()))


def diagonal_centroid(f_time: np.ndarray, grid: SimGrid) -> float:
    """``|f|^2``-weighted mean of ``t + t'``."""
    w = np.abs(f_time) ** 2
    t = grid.t_axis
    return float(((t[:, None] + t[None, :]) * w).sum() / w.sum())


def diagonal_extent(g_time: np.ndarray, grid: SimGrid, mass: float = 0.9) -> float:
    """Length of the central time span holding ``mass`` of the photon density ``g(t, t)``."""
    d = np.clip(np.diagonal(g_time).real, 0.0, None)
    cdf = np.cumsum(d) / d.sum()
    tail = (1.0 - mass) / 2.0
    lo = np.interp(tail, cdf, grid.t_axis)
    hi = np.interp(1.0 - tail, cdf, grid.t_axis)
    return float(hi - lo)


@dataclass(frozen=True)
class ConvergenceReport:
    base_n: int
    base_dz: float
    fine_n: int
    fine_dz: float
    deviations: dict
    max_deviation: float

    def to_dict(self) -> dict:
        return {"base_n": self.base_n, "base_dz": self.base_dz, "fine_n": self.fine_n,
                "fine_dz": self.fine_dz, "deviations": self.deviations,
                "max_deviation": self.max_deviation}


_TRACE_KEYS = ("mean_photons", "min_variance", "conj_variance_of_min", "uncertainty_product")


def trace_deviation(coarse: list[TraceRow], fine: list[TraceRow]) -> dict:
    """Per-quantity sup-norm difference of two traces at common ``z``, relative to the sup-norm of the fine one."""
    fine_by_z = {round(r.z, 9): r for r in fine}
    pairs = [(r, fine_by_z[round(r.z, 9)]) for r in coarse if round(r.z, 9) in fine_by_z]
    out = {}
    for key in _TRACE_KEYS:
        a = np.array([getattr(p, key) for p, _ in pairs])
        b = np.array([getattr(q, key) for _, q in pairs])
        scale = np.abs(b).max() if b.size else 0.0
        out[key] = 0.0 if scale == 0.0 else float(np.abs(a - b).max() / scale)
    return out


def convergence_check(params: PhysicalParams, grid: SimGrid, plan: StepPlan) -> ConvergenceReport:
    """Rerun on ``2n`` points (same window) with ``dz/2`` and compare traces.

    The refined plan traces every ``2 * trace_every`` steps so both runs
    sample the same ``z`` values.
    """
    base = evolve(params, grid, plan)
    fine_grid = build_grid(2 * grid.n, grid.t_window)
    fine_plan = StepPlan(dz=plan.dz / 2.0, n_steps=2 * plan.n_steps, snapshot_zs=(),
                         trace_every=2 * plan.trace_every)
    fine = evolve(params, fine_grid, fine_plan)
    dev = trace_deviation(base.trace, fine.trace)
    return ConvergenceReport(base_n=grid.n, base_dz=plan.dz, fine_n=fine_grid.n, fine_dz=fine_plan.dz,
                             deviations=dev, max_deviation=max(dev.values()) if dev else 0.0)


def splitting_order(params: PhysicalParams, grid: SimGrid, dz: float, l_total: float | None = None) -> dict:
    """Observed temporal order from final states at ``dz``, ``dz/2``, ``dz/4``.

    ``log2(|q(dz) - q(dz/2)| / |q(dz/2) - q(dz/4)|)`` for the matrix CFs
    (Frobenius norm) and the final trace scalars.
    """
    l_total = params.l_total if l_total is None else l_total
    runs = []
    for k in range(3):
        plan = make_plan(l_total, dz / 2 ** k, trace_every=10 ** 9)
        runs.append(evolve(params, grid, plan))

    def order(a, b, c):
        num, den = abs(a - b), abs(b - c)
        if den == 0.0:
            return math.inf
        return math.log2(num / den)

    out = {}
    for name in ("g", "f"):
        mats = [getattr(r.final, name) for r in runs]
        out[name] = math.log2(np.linalg.norm(mats[0] - mats[1]) / np.linalg.norm(mats[1] - mats[2]))
    for key in ("mean_photons", "min_variance"):
        vals = [getattr(r.trace[-1], key) for r in runs]
        out[key] = order(*vals)
    return out
