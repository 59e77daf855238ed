"""
Market Models Module

This module defines the symmetric Cournot environments (linear, polynomial and
radical inverse demand with a shared linear cost), computes prices and
profits, checks the assumptions of the pure-strategy existence theorem and
solves for the symmetric Nash equilibrium.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize

from src.utils.errors import ConfigurationError, ModelParameterError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
VERIFY_TOL = 1e-4


class DemandKind(str, Enum):
    """Functional form of the inverse demand curve."""

    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    RADICAL = "radical"


@dataclass(frozen=True)
class DemandSpec:
    """
    Inverse demand P(Q).

    Linear: P = a - b*Q. Polynomial: P = a*Q^3 + b. Radical: P = a*Q^(3/2) + b.
    """

    kind: DemandKind
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "kind", DemandKind(self.kind))

    def price(self, Q):
        """
        Evaluate the inverse demand at total quantity Q (scalar or array).

        Args:
            Q: Total quantity, Q >= 0

        Returns:
            Price, possibly negative
        """
        if self.kind is DemandKind.LINEAR:
            return self.a - self.b * Q
        if self.kind is DemandKind.POLYNOMIAL:
            return self.a * Q ** 3 + self.b
        return self.a * np.power(Q, 1.5) + self.b

    def slope(self, Q):
        """Analytic dP/dQ at Q."""
        if self.kind is DemandKind.LINEAR:
            return -self.b + 0.0 * Q
        if self.kind is DemandKind.POLYNOMIAL:
            return 3.0 * self.a * Q ** 2
        return 1.5 * self.a * np.sqrt(Q)

    @property
    def intercept(self) -> float:
        """Price at zero output."""
        return float(self.price(0.0))

    def root(self) -> float:
        """
        Smallest total quantity at which the price reaches zero.

        Returns:
            The root, or math.inf if the curve never reaches zero
        """
        if self.intercept <= 0:
            return 0.0
        if self.kind is DemandKind.LINEAR:
            return self.a / self.b if self.b > 0 else math.inf
        if self.a >= 0:
            return math.inf
        if self.kind is DemandKind.POLYNOMIAL:
            return (self.b / -self.a) ** (1.0 / 3.0)
        return (self.b / -self.a) ** (2.0 / 3.0)


@dataclass(frozen=True)
class CostSpec:
    """Linear symmetric cost c(q) = x*q + y."""

    x: float
    y: float = 0.0

    def total(self, q):
        return self.x * q + self.y


@dataclass(frozen=True)
class MarketModel:
    """
    A symmetric Cournot market: one demand curve, one cost function shared
    by all n players.
    """

    demand: DemandSpec
    cost: CostSpec
    n: int
    name: str = "custom"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"Number of players must be a positive integer, got {self.n}")


@dataclass
class GameOutcome:
    """Result of one simultaneous quantity game."""

    quantities: np.ndarray
    total_quantity: float
    price: float
    profits: np.ndarray


@dataclass(frozen=True)
class NashSolution:
    """Symmetric equilibrium quantity and the first-order-condition residual there."""

    q_hat: float
    residual: float


@dataclass(frozen=True)
class BestResponse:
    """
    Profit-maximizing output against a fixed opponents' total.

    at_boundary is set when the maximizer sits on an end of the search
    interval, which signals degenerate parameters or a zero-output response.
    """

    quantity: float
    profit: float
    at_boundary: bool


@dataclass(frozen=True)
class Theorem1Check:
    """Outcome of one numerical check of the equilibrium-existence hypotheses."""

    name: str
    passed: bool
    detail: str = ""
    assumed: bool = False


def price(model: MarketModel, Q):
    """
    Market price for total quantity Q.

    Args:
        model: Market model
        Q: Total quantity (scalar or numpy array), Q >= 0

    Returns:
        P(Q) per the model's demand curve
    """
    return model.demand.price(Q)


def profit(model: MarketModel, q_i, Q_total):
    """
    Profit of a player producing q_i when total supply is Q_total.

    Args:
        model: Market model
        q_i: Player's quantity
        Q_total: Total quantity including q_i

    Returns:
        P(Q_total)*q_i - (x*q_i + y)
    """
    return price(model, Q_total) * q_i - model.cost.total(q_i)


def play_game(model: MarketModel, quantities: Sequence[float], q_max: Optional[float] = None) -> GameOutcome:
    """
    Play one Cournot game.

    Args:
        model: Market model
        quantities: One quantity per player
        q_max: Upper bound of the active codec, checked when given

    Returns:
        GameOutcome with price and per-player profits

    Raises:
        ConfigurationError: Wrong number of quantities or out-of-range entries
    """
    q = np.asarray(quantities, dtype=float)
    if q.ndim != 1 or q.shape[0] != model.n:
        raise ConfigurationError(
            f"Expected {model.n} quantities for model {model.name}, got shape {q.shape}"
        )
    if np.any(q < 0) or (q_max is not None and np.any(q > q_max)):
        raise ConfigurationError(f"Quantities must lie in [0, {q_max}], got {q.tolist()}")

    total = float(q.sum())
    p = float(price(model, total))
    profits = p * q - model.cost.total(q)
    return GameOutcome(quantities=q, total_quantity=total, price=p, profits=profits)


def play_games(model: MarketModel, quantities: np.ndarray):
    """
    Vectorized form of play_game for a (games, n) matrix of quantities.

    Returns:
        Tuple of (totals, prices, profits) with shapes (G,), (G,), (G, n)
    """
    totals = quantities.sum(axis=1)
    prices = price(model, totals)
    profits = prices[:, None] * quantities - model.cost.total(quantities)
    return totals, prices, profits


def demand_root(model: MarketModel) -> float:
    """Smallest total quantity at which price falls to zero."""
    return model.demand.root()


def best_response(model: MarketModel, opponents_total: float, tol: float = 1e-9) -> BestResponse:
    """
    Single-player profit maximization against a fixed opponents' total.

    The search runs on [0, upper] where upper is the output that drives the
    price to zero; ties go to the smaller quantity.

    Args:
        model: Market model
        opponents_total: Sum of the other players' quantities, >= 0
        tol: Absolute tolerance on the maximizer

    Returns:
        BestResponse

    Raises:
        ModelParameterError: Demand never reaches zero price
    """
    if opponents_total < 0:
        raise ConfigurationError(f"opponents_total must be non-negative, got {opponents_total}")

    root = demand_root(model)
    if not math.isfinite(root):
        raise ModelParameterError(f"Demand of model {model.name} never reaches zero price")

    upper = max(root - opponents_total, 0.0)
    floor_profit = float(profit(model, 0.0, opponents_total))
    if upper <= 0.0:
        return BestResponse(quantity=0.0, profit=floor_profit, at_boundary=True)

    result = optimize.minimize_scalar(
        lambda q: -profit(model, q, q + opponents_total),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": tol},
    )
    q_star = float(result.x)
    best = float(profit(model, q_star, q_star + opponents_total))

    if floor_profit >= best:
        return BestResponse(quantity=0.0, profit=floor_profit, at_boundary=True)

    at_boundary = q_star >= upper - 10 * tol
    return BestResponse(quantity=q_star, profit=best, at_boundary=at_boundary)


def monopoly_quantity(model: MarketModel) -> float:
    """Best response of a lone firm."""
    return best_response(model, 0.0).quantity


def symmetric_foc(model: MarketModel, q: float) -> float:
    """
    First-order condition of one player when all n players produce q.

    P(nq) + P'(nq)*q - x
    """
    Q = model.n * q
    return float(model.demand.price(Q) + model.demand.slope(Q) * q - model.cost.x)


def symmetric_nash(model: MarketModel, tol: float = DEFAULT_TOL, initial_upper: float = 1.0) -> NashSolution:
    """
    Solve for the symmetric pure-strategy Nash equilibrium.

    The upper end of the bracket is doubled from initial_upper until the
    symmetric FOC changes sign, then the root is found by bisection.

    Args:
        model: Market model
        tol: Tolerance on q_hat
        initial_upper: First upper bracket tried

    Returns:
        NashSolution

    Raises:
        ModelParameterError: No sign change found
    """
    if symmetric_foc(model, 0.0) <= 0:
        raise ModelParameterError(
            f"Marginal profit at zero output is not positive for model {model.name}; no interior equilibrium"
        )

    hi = float(initial_upper)
    while symmetric_foc(model, hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ModelParameterError(f"No sign change of the symmetric FOC found for model {model.name}")

    if symmetric_foc(model, hi) == 0:
        q_hat = hi
    else:
        q_hat = optimize.bisect(
            lambda q: symmetric_foc(model, q), 0.0, hi,
            xtol=min(tol, 1e-12 * max(hi, 1.0)), maxiter=500,
        )

    solution = NashSolution(q_hat=float(q_hat), residual=symmetric_foc(model, q_hat))
    logger.debug(f"Symmetric Nash for {model.name}: q_hat={solution.q_hat:.6f}, residual={solution.residual:.3e}")
    return solution


def verify_nash_candidate(model: MarketModel, q: float, tol: float = VERIFY_TOL) -> bool:
    """
    Check whether q is a symmetric equilibrium quantity.

    Args:
        model: Market model
        q: Candidate quantity, >= 0
        tol: Accepted distance between q and the best response to (n-1)*q

    Returns:
        True if q is a best response to all other players producing q
    """
    response = best_response(model, (model.n - 1) * q)
    return abs(response.quantity - q) <= tol


def walrasian_quantity(model: MarketModel) -> float:
    """
    Symmetric price-taking quantity, solving P(n*q) = x.

    Reported next to the Nash quantity as the competitive contrast.
    """
    root = demand_root(model)
    if not math.isfinite(root) or model.demand.intercept <= model.cost.x:
        raise ModelParameterError(f"No competitive quantity for model {model.name}")
    return float(optimize.brentq(lambda q: model.demand.price(model.n * q) - model.cost.x, 0.0, root / model.n))


def validate_theorem1(model: MarketModel, q_max: Optional[float] = None, samples: int = 2001) -> List[Theorem1Check]:
    """
    Numerically check the hypotheses of the pure-strategy existence theorem.

    Prices are sampled on a grid up to 2*n*q_max. Log-concavity of demand is
    listed as assumed.

    Args:
        model: Market model
        q_max: Codec upper quantity; defaults to 3*q_hat, or 1000 if no equilibrium solves
        samples: Grid size

    Returns:
        One Theorem1Check per hypothesis
    """
    if q_max is None:
        try:
            q_max = 3.0 * symmetric_nash(model).q_hat
        except ModelParameterError:
            q_max = 1000.0

    horizon = 2.0 * model.n * q_max
    grid = np.linspace(0.0, horizon, samples)
    prices = np.asarray(price(model, grid), dtype=float)

    positive = prices[:-1] > 0
    decreasing = bool(positive.any()) and bool(np.all(np.diff(prices)[positive] < 0))
    monopoly = np.asarray(profit(model, grid, grid), dtype=float)

    checks = [
        Theorem1Check(
            name="demand strictly decreasing",
            passed=decreasing,
            detail=f"sampled {samples} points on [0, {horizon:.4g}] where P > 0",
        ),
        Theorem1Check(name="demand log-concave", passed=True, detail="assumed, not checked", assumed=True),
        Theorem1Check(
            name="cost strictly increasing",
            passed=model.cost.x > 0,
            detail=f"marginal cost x = {model.cost.x}",
        ),
        Theorem1Check(
            name="fixed cost non-negative",
            passed=model.cost.y >= 0,
            detail=f"fixed cost y = {model.cost.y}",
        ),
        Theorem1Check(
            name="monopoly profit becomes negative",
            passed=bool(monopoly[-1] < 0),
            detail=f"monopoly profit at q = {horizon:.4g} is {monopoly[-1]:.6g}",
        ),
    ]

    for check in checks:
        if not check.passed:
            logger.warning(f"Model {model.name}: check '{check.name}' failed ({check.detail})")
    return checks


LINEAR_DEMAND = DemandSpec(DemandKind.LINEAR, a=256.0, b=1.0)
LINEAR_COST = CostSpec(x=56.0, y=0.0)
# Leading coefficient negative, intercept positive; see DESIGN.md for the sign of the intercept.
POLYNOMIAL_DEMAND = DemandSpec(DemandKind.POLYNOMIAL, a=-1.0, b=7.36e7 + 10.0)
POLYNOMIAL_COST = CostSpec(x=10.0, y=10.0)
RADICAL_DEMAND = DemandSpec(DemandKind.RADICAL, a=-1.0, b=8300.0)
RADICAL_COST = CostSpec(x=100.0, y=10.0)

MODEL_CATALOGUE: Dict[str, MarketModel] = {
    "linear4": MarketModel(LINEAR_DEMAND, LINEAR_COST, n=4, name="linear4"),
    "linear20": MarketModel(LINEAR_DEMAND, LINEAR_COST, n=20, name="linear20"),
    "poly4": MarketModel(POLYNOMIAL_DEMAND, POLYNOMIAL_COST, n=4, name="poly4"),
    "poly20": MarketModel(POLYNOMIAL_DEMAND, POLYNOMIAL_COST, n=20, name="poly20"),
    "radical4": MarketModel(RADICAL_DEMAND, RADICAL_COST, n=4, name="radical4"),
    "radical20": MarketModel(RADICAL_DEMAND, RADICAL_COST, n=20, name="radical20"),
}

PUBLISHED_EQUILIBRIA: Dict[str, float] = {
    "linear4": 40.0,
    "linear20": 9.5238,
    "poly4": 86.9401,
    "poly20": 20.0,
    "radical4": 82.2143,
    "radical20": 19.3749,
}

# Chromosome length used with each catalogue entry.
DEFAULT_CHROMOSOME_BITS: Dict[int, int] = {4: 20, 20: 8}


def get_model(model_id: str) -> MarketModel:
    """
    Look up a catalogue model.

    Args:
        model_id: One of the MODEL_CATALOGUE keys

    Returns:
        MarketModel

    Raises:
        ConfigurationError: Unknown id
    """
    try:
        return MODEL_CATALOGUE[model_id]
    except KeyError:
        raise ConfigurationError(
            f"Unknown model id '{model_id}'; expected one of {sorted(MODEL_CATALOGUE)}"
        ) from None


def build_model(kind: str, a: float, b: float, x: float, y: float, n: int, name: str = "custom") -> MarketModel:
    """Build a custom model from raw parameters."""
    try:
        demand = DemandSpec(DemandKind(kind), float(a), float(b))
    except ValueError:
        raise ConfigurationError(f"Unknown demand kind '{kind}'") from None
    return MarketModel(demand=demand, cost=CostSpec(float(x), float(y)), n=int(n), name=name)


def default_bits(model: MarketModel) -> int:
    """Chromosome length used for a model: 20 bits for small markets, 8 for 20 players."""
    return DEFAULT_CHROMOSOME_BITS.get(model.n, 20 if model.n < 10 else 8)
