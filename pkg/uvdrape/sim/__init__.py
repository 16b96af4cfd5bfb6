"""Mass-spring cloth simulation against body capsules."""
