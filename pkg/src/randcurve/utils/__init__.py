"""Utility helpers for randcurve."""
