# Trajectory diagnostics
