"""Photon-counting OTDR simulator and trace analyzer."""

__version__ = "0.1.0"
