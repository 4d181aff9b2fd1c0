"""Nonlinear Granger causality from recurrent forecasts and knockoff counterfactuals."""

__version__ = "0.1.0"
