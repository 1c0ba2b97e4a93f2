"""Finite-sample and asymptotic risk of median estimators under shrinking contamination."""

__version__ = "0.1.0"
