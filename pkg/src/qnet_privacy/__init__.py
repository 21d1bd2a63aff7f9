"""Fisher-information privacy analysis for networks of quantum sensors."""

__version__ = "0.1.0"
