"""
Seeding Module

Derives decorrelated per-run seeds from an experiment's base seed.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output for state x."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, grid_index: int, replicate: int) -> int:
    """
    Seed of replicate `replicate` at grid point `grid_index`.

    Chains splitmix64 over the base seed, grid index and replicate index so
    that neighbouring indices give unrelated 64-bit seeds.

    Args:
        base_seed: Experiment base seed
        grid_index: Position of the grid point in expansion order
        replicate: Replicate index within the grid point

    Returns:
        64-bit seed
    """
    h = splitmix64(int(base_seed) & MASK64)
    h = splitmix64(h ^ (int(grid_index) & MASK64))
    return splitmix64(h ^ (int(replicate) & MASK64))
