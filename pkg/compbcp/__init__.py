"""Markov-boundary inference for regressions on compositional covariates."""

__version__ = "0.1.0"
