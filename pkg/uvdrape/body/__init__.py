"""Procedural skinned body, motions and named actions."""
