"""Anchor seeking for separable NMF via length-squared sampling."""
__version__ = "0.1.0"
