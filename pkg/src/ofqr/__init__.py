"""Optics-free QR imaging: simulation, reconstruction and evaluation."""
__version__ = "0.1.0"
