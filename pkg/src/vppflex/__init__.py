"""Virtual power plant market model with bi-level demand flexibility."""

__version__ = "0.1.0"
