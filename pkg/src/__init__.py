"""SAR-to-optical translation with adversarially distilled consistency models."""

__version__ = "0.1.0"
