"""Posterior belief assessment: Bayes linear combination of Bayesian analyses."""

from ._pbacore import *  # noqa: F401,F403
