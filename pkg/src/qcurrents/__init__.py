"""Exact kernels, structure functions and relation systems of quantum current
algebras on curves, plus floating-point Riemann theta kernels and a batch
verification CLI (``qcv``)."""

__version__ = "0.1.0"
