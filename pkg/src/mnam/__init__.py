"""Monotonic neural additive models: training with penalty escalation, certification and audits."""

__version__ = "0.1.0"
