"""UV maps: rasterized layouts, baking and normalization."""
