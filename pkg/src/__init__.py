"""inkwell - Conditional variational RNN for digital ink synthesis and recognition."""

__version__ = "0.1.0"
