"""Numerical workbench for Riesz means of Rankin-Selberg coefficient sums."""

from .coeffs import (
    CoeffTable,
    LSeriesSpec,
    SatakeSet,
    dirichlet_convolve,
    load_table,
    local_coeffs,
    multiplicative_sieve,
    rankin_square,
    save_table,
)
from .testbeds import TestbedId, make_testbed, normalize_hecke, tau_table

__all__ = [
    "CoeffTable",
    "LSeriesSpec",
    "SatakeSet",
    "TestbedId",
    "dirichlet_convolve",
    "load_table",
    "local_coeffs",
    "make_testbed",
    "multiplicative_sieve",
    "normalize_hecke",
    "rankin_square",
    "save_table",
    "tau_table",
]

__version__ = "0.1.0"
