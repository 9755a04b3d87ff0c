"""Adaptive friction compensation without velocity measurement."""
