"""
Genetics Module

The canonical GA operators: fitness-proportional selection, single random
point crossover and fixed-rate per-bit mutation.
"""
