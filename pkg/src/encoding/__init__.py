"""
Encoding Module

Bitstring chromosomes, their decoding to quantities and Hamming-distance
utilities.
"""
