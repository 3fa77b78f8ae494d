"""Yang-Mills-Higgs desk laboratory."""

__version__ = "0.1.0"
