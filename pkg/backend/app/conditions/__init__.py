# Hypothesis certification for coefficient schedules
