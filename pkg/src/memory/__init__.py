"""
Memory Module

This module contains the artifact store that keeps traces, per-run
statistics and batch reports on disk.
"""
