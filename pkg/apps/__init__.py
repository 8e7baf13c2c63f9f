"""loqa-lab: opponent shaping with learned opponent Q-values."""

__version__ = "0.1.0"
