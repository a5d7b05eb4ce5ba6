"""Spectral invariants of nonsmooth metric data."""

from ._core import (
    CurveModel,
    DomainError,
    HillOptions,
    HillPotential,
    InputError,
    KerrParams,
    NumericError,
    discriminant,
    fit_damping,
    kerr_index_table,
    kerr_r,
    no_go_test,
    period_matrix,
    periodic_spectrum,
    polynomial_signature,
    run_cli,
    simulate_collapse,
    truncate_curve,
)

__all__ = [
    "CurveModel",
    "DomainError",
    "HillOptions",
    "HillPotential",
    "InputError",
    "KerrParams",
    "NumericError",
    "discriminant",
    "fit_damping",
    "kerr_index_table",
    "kerr_r",
    "no_go_test",
    "period_matrix",
    "periodic_spectrum",
    "polynomial_signature",
    "run_cli",
    "simulate_collapse",
    "truncate_curve",
]
