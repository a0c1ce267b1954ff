# Tikhonov regularization path
