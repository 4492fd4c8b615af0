"""Command-line interface for lnamor."""
