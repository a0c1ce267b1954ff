# pd-flow backend package
