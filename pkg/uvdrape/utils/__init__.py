"""Utility functions for uvdrape."""
