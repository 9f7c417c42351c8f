"""
pymlt: latent trade-off models for directed multiplex networks.

The package fits simplex-constrained role embeddings with hierarchical,
multi-scale community structure to binary directed multiplex networks, and
ships the evaluation and statistics routines used to interpret such fits.
"""

__version__ = "0.3.0"
