# Experiment harness
