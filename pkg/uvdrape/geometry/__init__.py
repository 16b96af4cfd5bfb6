"""Triangle meshes, OBJ files, ray casting and closest-point queries."""
