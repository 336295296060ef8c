"""Hermite spectral solvers for a fourth-order stochastic PDE."""

import json

from ._core import (
    REPORT_SCHEMA,
    ConfigError,
    NumericalError,
    A_matrices,
    L_matrix,
    LA_form,
    abc_form,
    abc_sequences,
    bilap_form,
    derivative_matrix,
    f_functions,
    g_at_zero,
    gauss_hermite,
    hermite_eval,
    hermite_values,
    inner_p,
    norm_p,
    project,
    simulate,
    solve_pde,
)
from . import _core


def estimate_constant(p, params=None, N_max=1024, tol=1e-3):
    """Largest eigenvalue estimate of the weighted form, as a dict.

    ``params`` is ``(kappa, sigma, b)`` for the full operator, or None for
    the bilaplacian only.
    """
    return json.loads(_core._estimate_constant_json(p, params, N_max, tol))


def run(config):
    """Runs one command described by a config dict and returns the exit code.

    The report is written to ``config["out"]`` as for the command-line tool.
    """
    code, _log = _core._run_json(json.dumps(config))
    return code


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
