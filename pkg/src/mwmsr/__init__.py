"""Multi-hop MSR resilient consensus: filter, robustness checker, simulator."""

__version__ = "0.1.0"
