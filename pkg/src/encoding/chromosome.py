"""
Chromosome Encoding Module

Fixed-length bitstring chromosomes and the affine codec that maps their
unsigned integer value onto [0, q_max]. Bit k (0-based, least significant
first) carries weight 2^k; the text form is most significant bit first.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np

from src.utils.errors import ConfigurationError, UnsupportedConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Chromosome:
    """
    Immutable bitstring. bits[k] is the bit of weight 2^k.
    """

    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ConfigurationError(f"Chromosome bits must be 0 or 1, got {bits}")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def value(self) -> int:
        """Unsigned integer value of the bitstring."""
        return sum(bit << k for k, bit in enumerate(self.bits))

    @classmethod
    def from_value(cls, value: int, length: int) -> "Chromosome":
        if value < 0 or value >= 1 << length:
            raise ConfigurationError(f"Value {value} does not fit in {length} bits")
        return cls(tuple((value >> k) & 1 for k in range(length)))

    @classmethod
    def from_string(cls, text: str) -> "Chromosome":
        """Parse the msb-first text form, e.g. '0101'."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ConfigurationError(f"Invalid chromosome string '{text}'")
        return cls(tuple(int(ch) for ch in reversed(text)))

    @classmethod
    def from_array(cls, row: np.ndarray) -> "Chromosome":
        return cls(tuple(int(b) for b in row))

    def to_string(self) -> str:
        return "".join(str(b) for b in reversed(self.bits))

    def to_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.uint8)

    def complement(self) -> "Chromosome":
        return Chromosome(tuple(1 - b for b in self.bits))

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class QuantityCodec:
    """
    Maps an L-bit chromosome with integer value V to q_max * V / (2^L - 1).
    """

    L: int
    q_max: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ConfigurationError(f"Chromosome length must be a positive integer, got {self.L}")
        if not self.q_max > 0:
            raise ConfigurationError(f"q_max must be positive, got {self.q_max}")

    @classmethod
    def for_nash(cls, q_hat: float, L: int) -> "QuantityCodec":
        """Codec with q_max = 3*q_hat, which makes q_hat exactly representable for even L."""
        return cls(L=L, q_max=3.0 * q_hat)

    @property
    def denominator(self) -> int:
        return (1 << self.L) - 1

    @property
    def resolution(self) -> float:
        """Distance between neighbouring representable quantities."""
        return self.q_max / self.denominator

    @property
    def weights(self) -> np.ndarray:
        return np.left_shift(np.int64(1), np.arange(self.L, dtype=np.int64))

    def decode_value(self, value):
        """Quantity of an integer value (scalar or array)."""
        return self.q_max * value / self.denominator

    def values_of(self, members: np.ndarray) -> np.ndarray:
        """Integer values of a (..., L) bit array."""
        members = np.asarray(members)
        if members.shape[-1] != self.L:
            raise ConfigurationError(f"Expected chromosomes of length {self.L}, got {members.shape[-1]}")
        return members.astype(np.int64) @ self.weights

    def decode_array(self, members: np.ndarray) -> np.ndarray:
        """Quantities of a (..., L) bit array."""
        return self.decode_value(self.values_of(members))


def decode(codec: QuantityCodec, c: Chromosome) -> float:
    """
    Decode a chromosome to a quantity in [0, q_max].

    Args:
        codec: Quantity codec
        c: Chromosome of length codec.L

    Returns:
        q_max * V / (2^L - 1)

    Raises:
        ConfigurationError: Length mismatch
    """
    if len(c) != codec.L:
        raise ConfigurationError(f"Chromosome length {len(c)} does not match codec length {codec.L}")
    return codec.decode_value(c.value)


def encode(codec: QuantityCodec, q: float) -> Chromosome:
    """Nearest representable chromosome for quantity q (clipped to [0, q_max])."""
    value = int(round(min(max(q, 0.0), codec.q_max) / codec.resolution))
    return Chromosome.from_value(min(value, codec.denominator), codec.L)


def nash_chromosome(codec: QuantityCodec) -> Chromosome:
    """
    The alternating chromosome 0101...01 with value (2^L - 1)/3.

    With q_max = 3*q_hat it decodes to q_hat.

    Raises:
        UnsupportedConfigurationError: Odd chromosome length
    """
    if codec.L % 2:
        raise UnsupportedConfigurationError(
            f"The Nash chromosome needs an even chromosome length, got L={codec.L}"
        )
    return Chromosome(tuple(1 if k % 2 == 0 else 0 for k in range(codec.L)))


def anti_nash_chromosome(codec: QuantityCodec) -> Chromosome:
    """Bitwise complement of the Nash chromosome."""
    return nash_chromosome(codec).complement()


def hamming(a: Chromosome, b: Chromosome) -> int:
    """
    Number of positions at which two chromosomes differ.

    Raises:
        ConfigurationError: Length mismatch
    """
    if len(a) != len(b):
        raise ConfigurationError(f"Cannot compare chromosomes of lengths {len(a)} and {len(b)}")
    return sum(x != y for x, y in zip(a.bits, b.bits))


PopulationsLike = Union[np.ndarray, Iterable]


def stack_members(populations: PopulationsLike) -> np.ndarray:
    """
    Gather all players' chromosomes into one (count, L) bit array.

    Accepts a numpy array shaped (..., L), Population objects (anything with
    a ``members`` array), or nested sequences of Chromosome.
    """
    if isinstance(populations, np.ndarray):
        arr = populations
    else:
        rows = []
        for pop in populations:
            members = getattr(pop, "members", pop)
            if isinstance(members, np.ndarray):
                rows.append(members.reshape(-1, members.shape[-1]))
            elif isinstance(members, Chromosome):
                rows.append(members.to_array()[None, :])
            else:
                rows.append(np.array([c.to_array() for c in members], dtype=np.uint8))
        if not rows:
            raise ConfigurationError("No populations given")
        arr = np.concatenate(rows, axis=0)
    if arr.size == 0:
        raise ConfigurationError("Populations are empty")
    return arr.reshape(-1, arr.shape[-1])


def hamming_to(members: np.ndarray, target: Chromosome) -> np.ndarray:
    """Per-row Hamming distance of a (..., L) bit array to target."""
    if members.shape[-1] != len(target):
        raise ConfigurationError(f"Expected chromosomes of length {len(target)}, got {members.shape[-1]}")
    return np.count_nonzero(members != target.to_array(), axis=-1)


def avg_hamming_to_nash(populations: PopulationsLike, nash: Chromosome) -> float:
    """
    Average Hamming distance of every chromosome of every player to the
    Nash chromosome.

    Args:
        populations: All players' populations
        nash: The Nash chromosome

    Returns:
        Mean distance in [0, L]

    Raises:
        ConfigurationError: Empty populations or length mismatch
    """
    members = stack_members(populations)
    return float(hamming_to(members, nash).mean())
