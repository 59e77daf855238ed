"""
Analysis Module

Lumped-state Markov chain statistics and the quantity statistics and
hypothesis tests computed over run traces.
"""
