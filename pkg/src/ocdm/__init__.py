"""Orthogonal chirp division multiplexing: transforms, modem, channels and
a Monte Carlo BER simulator with an OFDM baseline."""

__version__ = "0.1.0"
