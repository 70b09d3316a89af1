"""Conservative pairwise money-transfer dynamics: simulator and audit tools."""

__version__ = "0.1.0"
