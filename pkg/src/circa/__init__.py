"""CIRCA chest X-ray triage engine."""

__version__ = "0.1.0"
