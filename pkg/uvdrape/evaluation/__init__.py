"""LBS baseline, error metrics and evaluation reports."""
