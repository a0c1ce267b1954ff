# Primal-dual dynamical systems
