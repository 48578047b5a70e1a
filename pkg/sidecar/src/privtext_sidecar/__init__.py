"""Scoring sidecar: sentence embeddings and perplexity over HTTP JSON."""

__version__ = "0.1.0"
