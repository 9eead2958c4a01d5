"""Correlation-function simulation of multimode SPDC in a lossy, dispersive waveguide.

The state of the down-converted light is Gaussian and fully described by
the two first-order correlation functions ``g = <a^dag a'>`` and
``f = <a a'>``.  They are propagated along the crystal by a split-step
scheme (:mod:`lossyspdc.propagator`) and turned into homodyne observables
(:mod:`lossyspdc.homodyne`).  :mod:`lossyspdc.singlemode` holds the exact
single-mode model used as a reference.
"""

__version__ = "0.1.0"

from .core import (CFState, Domain, PhysicalParams, PumpEnvelope, SimGrid, build_grid, build_pump,
                   cf_to_frequency, cf_to_time, flat_pump, suggest_window, vacuum)
from .homodyne import (QuadFormM, QuadratureMode, StageReport, TraceRow, build_quadratic_form,
                       mean_photon_number, most_squeezed_mode, quadrature_spectrum, stage_classifier,
                       trace_quantities)
from .propagator import (ConvergenceReport, EvolveResult, StepPlan, SupportError, auto_dz,
                         convergence_check, evolve, make_plan, splitting_order)
from .singlemode import MomentPair, analytic_moments, integrate_moments, variance_extrema

__all__ = [
    "CFState", "ConvergenceReport", "Domain", "EvolveResult", "MomentPair", "PhysicalParams",
    "PumpEnvelope", "QuadFormM", "QuadratureMode", "SimGrid", "StageReport", "StepPlan",
    "SupportError", "TraceRow", "analytic_moments", "auto_dz", "build_grid", "build_pump",
    "build_quadratic_form", "cf_to_frequency", "cf_to_time", "convergence_check", "evolve",
    "flat_pump", "integrate_moments", "make_plan", "mean_photon_number", "most_squeezed_mode",
    "quadrature_spectrum", "splitting_order", "stage_classifier", "suggest_window",
    "trace_quantities", "vacuum", "variance_extrema",
]
