"""Panel econometrics and MLP forecasting toolkit."""

__version__ = "0.1.0"
