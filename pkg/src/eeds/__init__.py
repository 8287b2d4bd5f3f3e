"""Round-based sensor-network energy simulator with fuzzy cluster-head election."""

__version__ = "0.1.0"
