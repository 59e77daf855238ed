"""
Market Module

Cournot market environments: inverse demand, costs, profits and the
symmetric Nash equilibrium solver.
"""
