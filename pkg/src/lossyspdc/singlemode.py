"""Zero-dispersion single-mode model: moment ODEs and their closed forms.

The two moments ``n = <a^dag a>`` and ``m = <a a>`` of a degenerate lossy
amplifier obey a closed linear system; starting from vacuum they have an
elementary analytic solution.  Besides being a result in itself, this module
is the reference the multimode propagator is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PhysicalParams

POLE_WINDOW = 1e-6


@dataclass(frozen=True)
class MomentPair:
    n: float
    m: complex
    z: float = 0.0

    @property
    def v_min(self) -> float:
        return 0.5 + self.n - abs(self.m)

    @property
    def v_max(self) -> float:
        return 0.5 + self.n + abs(self.m)

    def is_physical(self, tol: float = 1e-9) -> bool:
        return self.n >= -tol and abs(self.m) ** 2 <= self.n * (self.n + 1.0) + tol * max(1.0, self.n) ** 2


def _coupling(params: PhysicalParams, z: float) -> float:
    return params.rate_nl * params.pump_scale(z)


def moment_ode_rhs(state: MomentPair, params: PhysicalParams) -> tuple[float, complex]:
    """Right-hand side ``(dn/dz, dm/dz)`` at ``state.z``."""
    c = _coupling(params, state.z)
    loss = params.rate_a
    dn = 2.0 * c * state.m.real - loss * state.n
    dm = 2.0 * c * state.n - loss * state.m + c
    return dn, dm


def integrate_moments(params: PhysicalParams, z_end: float, dz: float) -> list[MomentPair]:
    """Fixed-step RK4 trajectory from vacuum, one sample per step.

    The step is shrunk slightly so that an integer number of steps lands
    exactly on ``z_end``.
    """
    if not dz > 0.0 or not z_end > 0.0:
        raise ValueError("dz and z_end must be positive")
    steps = max(1, round(z_end / dz))
    h = z_end / steps
    loss = params.rate_a
    rate_nl = params.rate_nl
    damp = params.rate_pump_damping

    def rhs(z, n, m):
        c = rate_nl * (math.exp(-z * damp) if damp else 1.0)
        return 2.0 * c * m.real - loss * n, 2.0 * c * n - loss * m + c

    n, m = 0.0, 0j
    out = [MomentPair(0.0, 0j, 0.0)]
    for k in range(steps):
        z = k * h
        k1n, k1m = rhs(z, n, m)
        k2n, k2m = rhs(z + h / 2, n + h / 2 * k1n, m + h / 2 * k1m)
        k3n, k3m = rhs(z + h / 2, n + h / 2 * k2n, m + h / 2 * k2m)
        k4n, k4m = rhs(z + h, n + h * k3n, m + h * k3m)
        n += h / 6 * (k1n + 2 * k2n + 2 * k3n + k4n)
        m += h / 6 * (k1m + 2 * k2m + 2 * k3m + k4m)
        out.append(MomentPair(n, m, (k + 1) * h))
    return out


def _exprel(x: float) -> float:
    if abs(x) < 1e-5:
        return 1.0 + x / 2.0 + x * x / 6.0
    return math.expm1(x) / x


def _near_pole(params: PhysicalParams) -> bool:
    return abs(params.rate_a * params.l_nl / 2.0 - 1.0) < POLE_WINDOW


def _require_undamped(params: PhysicalParams):
    if params.pump_damping is not None:
        raise ValueError("closed forms assume an undamped pump; use integrate_moments")


def analytic_moments(params: PhysicalParams, z: float) -> MomentPair:
    """Closed-form ``n(z)``, ``m(z)`` from vacuum.

    The textbook expression carries the denominator ``L_A^-2 - 4 L_NL^-2``
    and cancels badly both at small ``z`` and near ``L_A = L_NL/2`` (where it
    is 0/0).  The equivalent factored form

        n, m = z/(2 L_NL) [exprel((k - a) z) -+ exprel(-(k + a) z)],
        a = 1/L_A,  k = 2/L_NL

    has no removable singularity and stays accurate to ~1e-12 relative, so
    it is used everywhere.
    """
    _require_undamped(params)
    lnl = params.l_nl
    a = params.rate_a
    k = 2.0 / lnl
    plus = _exprel((k - a) * z)
    minus = _exprel(-(k + a) * z)
    pref = z / (2.0 * lnl)
    return MomentPair(pref * (plus - minus), complex(pref * (plus + minus)), z)


def variance_extrema(params: PhysicalParams, z: float) -> tuple[float, float]:
    """Smallest and largest single-mode quadrature variance after distance ``z``.

    ``1/2 + L_A/(2 L_A +- L_NL) (exp(-(1/L_A +- 2/L_NL) z) - 1)``, written with
    ``L_A/(2 L_A +- L_NL) = 1/(2 +- L_NL/L_A)`` so that ``L_A = inf`` needs no
    special case.  The minus branch is 0/0 at ``L_A = L_NL/2`` and switches
    to ``(z/L_NL) exprel(...)`` within the pole window.
    """
    _require_undamped(params)
    lnl = params.l_nl
    a = params.rate_a
    k = 2.0 / lnl
    v_min = 0.5 + math.expm1(-(a + k) * z) / (2.0 + a * lnl)
    if _near_pole(params):
        delta = 2.0 - a * lnl
        v_max = 0.5 + (z / lnl) * _exprel(delta * z / lnl)
    else:
        v_max = 0.5 + math.expm1(-(a - k) * z) / (2.0 - a * lnl)
    return v_min, v_max
