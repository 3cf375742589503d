"""Desk-scale lab for Cramer-Wold generative autoencoders and latent generators."""

__version__ = "0.1.0"
