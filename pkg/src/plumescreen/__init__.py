"""Screening toolkit for methane-plume vs retrieval-artifact classification."""

__version__ = "0.1.0"
