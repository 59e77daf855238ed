"""
Simulation Parameters Module

Run configuration for the four learning algorithms and its dict form used in
trace headers and experiment configs.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

from src.market.models import MarketModel, build_model, default_bits, get_model
from src.utils.errors import ConfigurationError, UnsupportedConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_GA_RATE = 50


class AlgorithmKind(str, Enum):
    """
    VI: Vriend individual, VS: Vriend social,
    CP: co-evolutionary programming, CS: social co-evolutionary programming.
    """

    VI = "VI"
    VS = "VS"
    CP = "CP"
    CS = "CS"

    @property
    def is_social(self) -> bool:
        return self in (AlgorithmKind.VS, AlgorithmKind.CS)

    @property
    def is_vriend(self) -> bool:
        return self in (AlgorithmKind.VI, AlgorithmKind.VS)


class InitMode(str, Enum):
    RANDOM = "random"
    ANTI_NASH = "anti_nash"
    NASH = "nash"
    EXPLICIT = "explicit"


def model_to_dict(model: MarketModel) -> Dict[str, Any]:
    return {
        "name": model.name,
        "kind": model.demand.kind.value,
        "a": model.demand.a,
        "b": model.demand.b,
        "x": model.cost.x,
        "y": model.cost.y,
        "n": model.n,
    }


def model_from_dict(data: Dict[str, Any]) -> MarketModel:
    missing = {"kind", "a", "b", "x", "n"} - set(data)
    if missing:
        raise ConfigurationError(f"Custom model is missing keys {sorted(missing)}")
    return build_model(
        kind=data["kind"], a=data["a"], b=data["b"], x=data["x"], y=data.get("y", 0.0),
        n=data["n"], name=data.get("name", "custom"),
    )


@dataclass
class SimulationParams:
    """
    Full configuration of one run.

    ga_rate is used by VI/VS only. L defaults to 20 bits for 4-player
    markets and 8 bits for 20-player markets. q_max is always 3*q_hat.
    explicit_populations holds, per player, K msb-first bit strings.
    """

    model_id: str
    kind: AlgorithmKind
    K: int
    p_mut: float
    T: int
    seed: int
    L: Optional[int] = None
    p_cross: float = 1.0
    ga_rate: Optional[int] = DEFAULT_GA_RATE
    init: InitMode = InitMode.RANDOM
    custom_model: Optional[MarketModel] = None
    explicit_populations: Optional[List[List[str]]] = None
    store_populations: bool = False
    record_games: bool = False

    def __post_init__(self):
        try:
            self.kind = AlgorithmKind(self.kind)
            self.init = InitMode(self.init)
        except ValueError as e:
            raise ConfigurationError(str(e)) from None

        if self.custom_model is None:
            model = get_model(self.model_id)
        else:
            model = self.custom_model
        if self.L is None:
            self.L = default_bits(model)

        if self.kind.is_vriend:
            if self.ga_rate is None:
                self.ga_rate = DEFAULT_GA_RATE
            if int(self.ga_rate) != self.ga_rate or self.ga_rate < 1:
                raise ConfigurationError(f"GArate must be a positive integer, got {self.ga_rate}", key="ga_rate")
        else:
            self.ga_rate = None

        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"Population size must be a positive integer, got {self.K}", key="K")
        breeding_size = self.K * model.n if self.kind.is_social else self.K
        if breeding_size % 2:
            raise ConfigurationError(
                f"The population bred by {self.kind.value} has odd size {breeding_size}; use an even population size",
                key="K",
            )
        if self.T < 1:
            raise ConfigurationError(f"Number of generations must be at least 1, got {self.T}", key="T")
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigurationError(f"Mutation probability must lie in [0, 1], got {self.p_mut}", key="p_mut")
        if not 0.0 <= self.p_cross <= 1.0:
            raise ConfigurationError(f"Crossover probability must lie in [0, 1], got {self.p_cross}", key="p_cross")
        if self.L < 2 or self.L % 2:
            raise UnsupportedConfigurationError(
                f"Chromosome length must be even and at least 2 so the Nash quantity is representable, got {self.L}",
                key="L",
            )
        if self.init is InitMode.EXPLICIT and self.explicit_populations is None:
            raise ConfigurationError("Explicit initialization needs explicit_populations", key="init")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

    @property
    def model(self) -> MarketModel:
        return self.custom_model if self.custom_model is not None else get_model(self.model_id)

    @property
    def games_per_generation(self) -> int:
        return self.ga_rate if self.kind.is_vriend else self.K

    def batch_key(self) -> Dict[str, Any]:
        """Every setting except the seed; runs sharing it belong to one batch."""
        data = self.to_dict()
        data.pop("seed")
        return data

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "model_id": self.model_id,
            "kind": self.kind.value,
            "K": self.K,
            "L": self.L,
            "p_mut": self.p_mut,
            "p_cross": self.p_cross,
            "ga_rate": self.ga_rate,
            "T": self.T,
            "seed": self.seed,
            "init": self.init.value,
            "store_populations": self.store_populations,
            "record_games": self.record_games,
        }
        if self.custom_model is not None:
            data["custom_model"] = model_to_dict(self.custom_model)
        if self.explicit_populations is not None:
            data["explicit_populations"] = [list(p) for p in self.explicit_populations]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimulationParams":
        data = dict(data)
        if data.get("custom_model") is not None:
            data["custom_model"] = model_from_dict(data["custom_model"])
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown simulation parameters {sorted(unknown)}")
        return cls(**data)
