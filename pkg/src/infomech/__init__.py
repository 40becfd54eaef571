"""Compute, construct and certify mechanisms for selling information to a
Bayesian decision maker."""

from . import dist, env, experiment, fullinfo, lowerbound, mech, multistate, numeric, optlp

__version__ = "0.1.0"

__all__ = ["dist", "env", "experiment", "fullinfo", "lowerbound", "mech", "multistate", "numeric", "optlp"]
