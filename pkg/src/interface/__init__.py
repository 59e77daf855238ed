"""
Interface Module

This module contains the command-line interface and the console report
renderer.
"""
