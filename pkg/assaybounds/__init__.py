"""Uniform uncertainty bounds for classification and prevalence estimation."""

__version__ = "1.0.0"
