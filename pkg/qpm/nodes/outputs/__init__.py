"""Nodes that write results to disk."""
