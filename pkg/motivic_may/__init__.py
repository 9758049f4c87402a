"""May spectral sequence engine for the motivic Steenrod algebra over C."""

__version__ = "1.0.0"
