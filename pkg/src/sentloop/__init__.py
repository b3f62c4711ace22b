"""Estimation and closed-loop analysis of sentiment-engagement feedback."""

__version__ = "0.1.0"
