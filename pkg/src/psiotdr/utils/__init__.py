"""Shared helpers: physical units and random streams."""
