# ODE integrators
