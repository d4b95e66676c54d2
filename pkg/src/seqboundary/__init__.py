"""Naive Bayes triplet classifier for DNA reads and tools for its decision boundary."""

__version__ = "0.1.0"
