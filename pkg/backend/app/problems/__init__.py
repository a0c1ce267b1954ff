# Constrained problem definitions
