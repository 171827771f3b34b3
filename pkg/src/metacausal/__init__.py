"""Meta-transfer learning of causal structure from adaptation speed."""

__version__ = "0.1.0"
