"""Physical parameters, discretization grid, pump model and CF transforms.

Conventions used throughout the package
---------------------------------------
* Matrices store continuum densities: ``integral dw`` becomes ``sum * dw``,
  ``delta(w - w')`` becomes ``1/dw`` on the diagonal (``1/dt`` in time).
* Time/frequency transforms follow the unitary field convention
  ``a(t) = (2 pi)^-1/2 integral dw exp(-i w t) a(w)``, so

      g(t, t') = (1/2pi) integral dw dw' exp(+i w t - i w' t') g(w, w')
      f(t, t') = (1/2pi) integral dw dw' exp(-i w t - i w' t') f(w, w')

  and the identity in one domain maps to the identity in the other.
* An infinite characteristic length means the corresponding term is switched
  off; the rate properties on :class:`PhysicalParams` return exactly ``0.0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

_FFT_WORKERS = -1


def _rate(length: float) -> float:
    return 0.0 if math.isinf(length) else 1.0 / length


@dataclass(frozen=True)
class PhysicalParams:
    """The complete physics input of a run.

    Lengths are in any common unit (conventionally ``l_nl = 1``), times in
    any unit (conventionally ``tau_p = 1``).  ``math.inf`` disables the
    loss, walk-off or dispersion term.  ``pump_damping`` is the pump
    attenuation length, ``None`` for an undamped pump.
    """

    l_nl: float = 1.0
    l_a: float = math.inf
    l_ov: float = math.inf
    l_d: float = math.inf
    tau_p: float = 1.0
    l_total: float = 1.0
    pump_damping: float | None = None

    def __post_init__(self):
        for name in ("l_nl", "l_a", "l_ov", "l_d", "tau_p"):
            value = float(getattr(self, name))
            if math.isnan(value) or value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)
        if math.isinf(self.l_nl) or math.isinf(self.tau_p):
            raise ValueError("l_nl and tau_p must be finite")
        l_total = float(self.l_total)
        if math.isnan(l_total) or math.isinf(l_total) or l_total < 0.0:
            raise ValueError(f"l_total must be finite and >= 0, got {l_total!r}")
        object.__setattr__(self, "l_total", l_total)
        if self.pump_damping is not None:
            pd = float(self.pump_damping)
            if math.isnan(pd) or pd <= 0.0:
                raise ValueError(f"pump_damping must be positive, got {pd!r}")
            object.__setattr__(self, "pump_damping", pd)

    @property
    def rate_nl(self) -> float:
        return 1.0 / self.l_nl

    @property
    def rate_a(self) -> float:
        return _rate(self.l_a)

    @property
    def rate_ov(self) -> float:
        return _rate(self.l_ov)

    @property
    def rate_d(self) -> float:
        return _rate(self.l_d)

    @property
    def rate_pump_damping(self) -> float:
        return 0.0 if self.pump_damping is None else _rate(self.pump_damping)

    def pump_scale(self, z: float) -> float:
        """Pump amplitude relative to its input value after distance ``z``."""
        rate = self.rate_pump_damping
        return 1.0 if rate == 0.0 else math.exp(-z * rate)

    def with_(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "l_nl": self.l_nl,
            "l_a": self.l_a,
            "l_ov": self.l_ov,
            "l_d": self.l_d,
            "tau_p": self.tau_p,
            "l_total": self.l_total,
            "pump_damping": self.pump_damping,
        }


@dataclass(frozen=True, eq=False)
class SimGrid:
    """Centered ``n``-point time and angular-frequency lattices."""

    n: int
    t_window: float
    dt: float
    dw: float
    t_axis: np.ndarray = field(repr=False)
    w_axis: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"n": self.n, "t_window": self.t_window, "dt": self.dt, "dw": self.dw}


def build_grid(n: int, t_window: float) -> SimGrid:
    """Build the lattice; ``t_axis = (k - n/2) dt`` and likewise for ``w_axis``."""
    if int(n) != n or n < 8 or (int(n) & (int(n) - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 8, got {n!r}")
    n = int(n)
    t_window = float(t_window)
    if not t_window > 0.0 or math.isinf(t_window):
        raise ValueError(f"t_window must be positive and finite, got {t_window!r}")
    dt = t_window / n
    dw = 2.0 * math.pi / t_window
    k = np.arange(n) - n // 2
    t_axis = k * dt
    w_axis = k * dw
    t_axis.flags.writeable = False
    w_axis.flags.writeable = False
    return SimGrid(n=n, t_window=t_window, dt=dt, dw=dw, t_axis=t_axis, w_axis=w_axis)


def suggest_window(params: PhysicalParams, margin: float = 5.0) -> float:
    """Time window holding the CF support as it drifts off the pump.

    Correlations generated at the pump slide along the diagonal at
    ``tau_p / l_ov`` per unit length, so the window half-width must cover
    that drift over the crystal plus ``margin`` pump durations.
    """
    drift = params.tau_p * params.l_total * params.rate_ov
    return 2.0 * (drift + margin * params.tau_p)


@dataclass(frozen=True, eq=False)
class PumpEnvelope:
    """Pump amplitude normalized to its peak: spectral ``P(w)/P0``, temporal ``P(t)/P0``."""

    spectral: np.ndarray
    temporal: np.ndarray

    def scaled(self, factor: float) -> "PumpEnvelope":
        return PumpEnvelope(self.spectral * factor, self.temporal * factor)


def build_pump(grid: SimGrid, params: PhysicalParams) -> PumpEnvelope:
    """Gaussian pump ``exp(-w^2 tau^2 / 2)`` and its peak-normalized time profile."""
    tau = params.tau_p
    if grid.dt > tau / 2.0:
        raise ValueError(f"grid under-resolves the pump: dt={grid.dt:g} > tau_p/2={tau / 2:g}")
    if grid.t_window < 8.0 * tau:
        raise ValueError(f"window {grid.t_window:g} does not contain the pump (need >= {8 * tau:g})")
    spectral = np.exp(-0.5 * (grid.w_axis * tau) ** 2).astype(complex)
    # sum_k dw exp(-i w_k t) P(w_k), scaled so the continuum peak is one
    raw = sfft.fftshift(sfft.fft(sfft.ifftshift(spectral), workers=_FFT_WORKERS))
    temporal = raw * (grid.dw * tau / math.sqrt(2.0 * math.pi))
    return PumpEnvelope(spectral=spectral, temporal=temporal)


def flat_pump(grid: SimGrid, tau_p: float = 1.0) -> PumpEnvelope:
    """Uniform unit pump over the whole window (single-mode reduction tests)."""
    spectral = np.zeros(grid.n, dtype=complex)
    spectral[grid.n // 2] = math.sqrt(2.0 * math.pi) / (grid.dw * tau_p)
    return PumpEnvelope(spectral=spectral, temporal=np.ones(grid.n, dtype=complex))


class Domain(enum.Enum):
    TIME = "time"
    FREQUENCY = "frequency"


@dataclass(frozen=True, eq=False)
class CFState:
    """The two correlation functions ``g = <a^dag a'>`` and ``f = <a a'>`` at distance ``z``."""

    g: np.ndarray
    f: np.ndarray
    domain: Domain
    z: float = 0.0

    def __post_init__(self):
        if self.g.shape != self.f.shape or self.g.ndim != 2 or self.g.shape[0] != self.g.shape[1]:
            raise ValueError("g and f must be square matrices of equal shape")
        self.g.flags.writeable = False
        self.f.flags.writeable = False

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def structure_error(self) -> dict:
        """Hermiticity/symmetry defects relative to the matrix norms."""
        scale_g = max(np.abs(self.g).max(), 1e-300)
        scale_f = max(np.abs(self.f).max(), 1e-300)
        diag = np.diag(self.g)
        return {
            "hermitian": float(np.abs(self.g - self.g.conj().T).max() / scale_g),
            "symmetric": float(np.abs(self.f - self.f.T).max() / scale_f),
            "diag_imag": float(np.abs(diag.imag).max() / scale_g),
            "diag_negative": float(max(0.0, -diag.real.min()) / scale_g),
        }


def vacuum(grid: SimGrid, domain: Domain = Domain.FREQUENCY) -> CFState:
    z = np.zeros((grid.n, grid.n), dtype=complex)
    return CFState(g=z, f=z.copy(), domain=domain, z=0.0)


# raw paired transforms on plain arrays, shared with the propagator loop

def _shift_in(a):
    return sfft.ifftshift(a, axes=(0, 1))


def _shift_out(a):
    return sfft.fftshift(a, axes=(0, 1))


def g_freq_to_time(g: np.ndarray, grid: SimGrid) -> np.ndarray:
    a = sfft.fft(_shift_in(g), axis=1, norm="ortho", workers=_FFT_WORKERS)
    a = sfft.ifft(a, axis=0, norm="ortho", overwrite_x=True, workers=_FFT_WORKERS)
    return _shift_out(a) * (grid.dw / grid.dt)


def f_freq_to_time(f: np.ndarray, grid: SimGrid) -> np.ndarray:
    a = sfft.fft2(_shift_in(f), norm="ortho", workers=_FFT_WORKERS)
    return _shift_out(a) * (grid.dw / grid.dt)


def g_time_to_freq(g: np.ndarray, grid: SimGrid) -> np.ndarray:
    a = sfft.ifft(_shift_in(g), axis=1, norm="ortho", workers=_FFT_WORKERS)
    a = sfft.fft(a, axis=0, norm="ortho", overwrite_x=True, workers=_FFT_WORKERS)
    return _shift_out(a) * (grid.dt / grid.dw)


def f_time_to_freq(f: np.ndarray, grid: SimGrid) -> np.ndarray:
    a = sfft.ifft2(_shift_in(f), norm="ortho", workers=_FFT_WORKERS)
    return _shift_out(a) * (grid.dt / grid.dw)


def cf_to_time(state: CFState, grid: SimGrid) -> CFState:
    """Frequency-domain CFs to time domain (kernels ``e^{iwt-iw't'}`` for g, ``e^{-iwt-iw't'}`` for f)."""
    if state.domain is not Domain.FREQUENCY:
        raise ValueError(f"cf_to_time expects a frequency-domain state, got {state.domain.value}")
    return CFState(g_freq_to_time(state.g, grid), f_freq_to_time(state.f, grid), Domain.TIME, state.z)


def cf_to_frequency(state: CFState, grid: SimGrid) -> CFState:
    """Inverse of :func:`cf_to_time`."""
    if state.domain is not Domain.TIME:
        raise ValueError(f"cf_to_frequency expects a time-domain state, got {state.domain.value}")
    return CFState(g_time_to_freq(state.g, grid), f_time_to_freq(state.f, grid), Domain.FREQUENCY, state.z)
