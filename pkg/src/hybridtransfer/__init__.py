"""Instance-weighted transfer learning with hybrid source weights."""

__version__ = "0.1.0"
