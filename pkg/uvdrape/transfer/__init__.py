"""Correspondences between body, cloth and arbitrary garments."""
