"""Dataset generation and sample access."""
