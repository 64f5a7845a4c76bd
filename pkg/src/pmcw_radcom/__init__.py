"""Baseband simulation of shift-register PMCW joint radar-communication links."""

__version__ = "0.1.0"
