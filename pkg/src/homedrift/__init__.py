"""Ambient behavioral monitoring pipeline: home simulation, pseudonymized
sync, daily feature extraction, and sustained-change detection."""

__version__ = "0.1.0"
