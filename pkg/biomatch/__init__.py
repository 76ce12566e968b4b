"""biomatch: biometric verification and identification over learned embeddings."""

__version__ = "0.1.0"
