"""
Utils Module

This module contains configuration, error types and seeding helpers shared
by the simulator layers.
"""
