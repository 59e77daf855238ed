"""
Cournot GA - Source Files

This directory contains the source code for the co-evolutionary Cournot
learning simulator. The code is organized into modules following the
architecture design.
"""
