"""Monte Carlo and analytic toolkit for cavity-enhanced single nuclear spin readout."""

__version__ = "0.1.0"
