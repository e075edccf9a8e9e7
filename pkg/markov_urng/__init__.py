"""Finite-length security bounds and Toeplitz extraction for Markov sources"""
__version__ = "0.1.0"
