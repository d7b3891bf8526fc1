"""Nodes that compute spectra, peaks, joint grids, designs and verification reports."""
