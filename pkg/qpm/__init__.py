"""qpm: spectra and double-phase-matching design of phase-reversed QPM superlattices."""
__version__ = "0.1.0"
