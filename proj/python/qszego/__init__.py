"""Python bindings for the qszego spectral solver.

Coefficient vectors are 1-d complex arrays holding u(0), ..., u(N).
"""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    NoExponentialRegime,
    NoResonantPhase,
    NumericalInstability,
    RationalState,
    compute_J,
    conserved,
    envelope_roots,
    evolve,
    evolve_ode,
    find_blowup_initial,
    fit_exponential,
    integrate,
    kappa,
    multiply,
    projected_mod_squared,
    resonance_residual,
    rhs,
    singular_values,
    sobolev_norm,
    trace_norm,
)


def run_lab(experiment, config, out_dir, base_dir="."):
    """Run a lab experiment from a config dict; returns (exit_code, summary)."""
    code, summary = _core._run_lab(experiment, json.dumps(config), os.fspath(out_dir), os.fspath(base_dir))
    return code, json.loads(summary)

