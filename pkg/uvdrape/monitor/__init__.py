"""Terminal monitor for training runs and evaluation reports."""
