"""Spurious-correlation audits for time series."""
