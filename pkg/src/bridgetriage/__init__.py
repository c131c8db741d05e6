"""Uncertainty-aware surrogate triage for reinforced concrete frame bridges."""

__version__ = "0.1.0"
