"""Numpy conditional GAN: layers, networks, losses, training and inference."""
