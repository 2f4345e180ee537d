"""Tomokit — optical quantum state tomography: state synthesis, noisy measurement data, MLE and adversarial reconstruction."""

__version__ = "0.1.0"
