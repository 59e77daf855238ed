"""
Harness Module

Experiment configurations, batch execution, equilibrium discovery and the
replication catalogue.
"""
