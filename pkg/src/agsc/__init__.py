"""Causal mediation probes of subject-verb agreement in small transformer language models."""

__version__ = "0.1.0"
