"""
Simulation Module

The four co-evolutionary learning engines and the per-generation trace
records they emit.
"""
