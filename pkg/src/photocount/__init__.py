"""Direct photon-counting measurement of phase-space quasidistributions."""

__version__ = "0.1.0"
