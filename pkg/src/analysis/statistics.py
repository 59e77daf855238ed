"""
Statistics Module

Quantity statistics of a run (grand mean, per-generation means, standard
deviation of the per-game average quantity and per-player means) and the
one-sample location tests used to compare them with the Nash quantity.

Batch tests treat run-level means as independent across seeds. The
within-run player tests use the per-generation series of each player's mean
quantity; those series are autocorrelated, so they are reported next to the
batch verdicts rather than in place of them.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
DEGENERATE_RTOL = 1e-9
DEGENERATE_SD = 1e-12


@dataclass
class RunQuantityStats:
    """Quantity statistics of one run."""

    grand_mean_Q: float
    per_gen_mean_Q: List[float]
    std_Q: float
    per_player_means: List[float]
    games: int

    def to_dict(self, include_series: bool = False) -> Dict[str, Any]:
        data = asdict(self)
        if not include_series:
            data.pop("per_gen_mean_Q")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunQuantityStats":
        return cls(
            grand_mean_Q=data["grand_mean_Q"],
            per_gen_mean_Q=list(data.get("per_gen_mean_Q", [])),
            std_Q=data["std_Q"],
            per_player_means=list(data["per_player_means"]),
            games=data["games"],
        )


@dataclass
class TestVerdict:
    """Two-sided one-sample location test. accepted iff |statistic| <= critical_value."""

    __test__ = False

    statistic: float
    critical_value: float
    accepted: bool
    alpha: float
    sample_size: int
    sample_mean: float
    target: float
    p_value: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunSample:
    """What a batch test needs from one run."""

    params: Dict[str, Any]
    quantity: RunQuantityStats
    player_tests: List[TestVerdict] = field(default_factory=list)


@dataclass
class VerdictTable:
    """Batch verdicts for H0: mean Q = q_nash and H0: mean q_i = q_nash."""

    q_nash: float
    alpha: float
    runs: int
    grand_mean: Optional[TestVerdict]
    players: List[Optional[TestVerdict]]
    within_run_rejection_rate: Optional[float] = None
    runs_with_all_players_rejected: int = 0

    @property
    def players_rejected(self) -> int:
        return sum(1 for v in self.players if v is not None and not v.accepted)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q_nash": self.q_nash,
            "alpha": self.alpha,
            "runs": self.runs,
            "grand_mean": self.grand_mean.to_dict() if self.grand_mean else None,
            "players": [v.to_dict() if v else None for v in self.players],
            "players_rejected": self.players_rejected,
            "within_run_rejection_rate": self.within_run_rejection_rate,
            "runs_with_all_players_rejected": self.runs_with_all_players_rejected,
        }


def _game_matrix(trace: Any) -> Optional[np.ndarray]:
    if hasattr(trace, "generations"):
        return None
    matrix = np.asarray(trace, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ConfigurationError("Per-game quantities must be a non-empty (games, players) matrix")
    return matrix


def quantity_stats(trace: Any, n: Optional[int] = None) -> RunQuantityStats:
    """
    Quantity statistics of a run.

    Accepts a RunTrace, whose generation records carry per-generation
    moments, or a (games, n) matrix of played quantities, which is treated
    as a single generation.

    The standard deviation is the sample standard deviation (normalizer
    games - 1) of the per-game average quantity; generation moments are
    merged pairwise so no per-game values need to be kept.

    Args:
        trace: RunTrace or per-game quantity matrix
        n: Number of players, checked against the trace when given

    Returns:
        RunQuantityStats

    Raises:
        ConfigurationError: Empty trace or player count mismatch
    """
    matrix = _game_matrix(trace)
    if matrix is not None:
        if n is not None and matrix.shape[1] != n:
            raise ConfigurationError(f"Expected {n} players, got {matrix.shape[1]}")
        per_game = matrix.mean(axis=1)
        games = matrix.shape[0]
        return RunQuantityStats(
            grand_mean_Q=float(per_game.mean()),
            per_gen_mean_Q=[float(per_game.mean())],
            std_Q=float(per_game.std(ddof=1)) if games > 1 else 0.0,
            per_player_means=matrix.mean(axis=0).tolist(),
            games=games,
        )

    generations = trace.generations
    if not generations:
        raise ConfigurationError("Cannot compute quantity statistics of an empty trace")
    counts = np.array([g.games for g in generations], dtype=float)
    means = np.array([g.mean_q for g in generations], dtype=float)
    m2 = np.array([g.q_m2 for g in generations], dtype=float)
    players = np.array([g.player_mean_q for g in generations], dtype=float)
    if n is not None and players.shape[1] != n:
        raise ConfigurationError(f"Expected {n} players, got {players.shape[1]}")

    total = counts.sum()
    grand = float((counts * means).sum() / total)
    pooled_m2 = float(m2.sum() + (counts * (means - grand) ** 2).sum())
    std = float(np.sqrt(pooled_m2 / (total - 1))) if total > 1 else 0.0
    player_means = (counts[:, None] * players).sum(axis=0) / total

    return RunQuantityStats(
        grand_mean_Q=grand,
        per_gen_mean_Q=means.tolist(),
        std_Q=std,
        per_player_means=player_means.tolist(),
        games=int(total),
    )


def one_sample_mean_test(sample: Sequence[float], target: float, alpha: float = DEFAULT_ALPHA) -> TestVerdict:
    """
    Two-sided one-sample t test of mean == target.

    A sample without spread is decided by comparing its mean with the target
    (relative tolerance 1e-9): statistic 0 and accepted when they agree,
    infinite and rejected otherwise.

    Args:
        sample: Observations, at least two
        target: Hypothesized mean
        alpha: Test size

    Returns:
        TestVerdict

    Raises:
        ConfigurationError: Fewer than two observations or alpha outside (0, 1)
    """
    values = np.asarray(sample, dtype=float)
    size = values.size
    if size < 2:
        raise ConfigurationError(f"A one-sample test needs at least 2 observations, got {size}")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"Test size must lie in (0, 1), got {alpha}")

    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    critical = float(stats.t.ppf(1.0 - alpha / 2.0, df=size - 1))

    scale = max(abs(mean), abs(target), 1.0)
    if sd <= DEGENERATE_SD * scale:
        equal = bool(np.isclose(mean, target, rtol=DEGENERATE_RTOL, atol=0.0))
        statistic = 0.0 if equal else float("inf")
        p_value = 1.0 if equal else 0.0
    else:
        statistic = (mean - target) / (sd / np.sqrt(size))
        p_value = float(2.0 * stats.t.sf(abs(statistic), df=size - 1))

    return TestVerdict(
        statistic=float(statistic),
        critical_value=critical,
        accepted=bool(abs(statistic) <= critical),
        alpha=alpha,
        sample_size=int(size),
        sample_mean=mean,
        target=float(target),
        p_value=p_value,
    )


def within_run_player_tests(trace: Any, q_nash: float, alpha: float = DEFAULT_ALPHA) -> List[TestVerdict]:
    """
    Per-player tests inside one run.

    Each player's sample is the series of its per-generation mean quantity.
    """
    series = np.array([g.player_mean_q for g in trace.generations], dtype=float)
    if series.shape[0] < 2:
        raise ConfigurationError("Within-run tests need at least 2 generations")
    return [one_sample_mean_test(series[:, i], q_nash, alpha) for i in range(series.shape[1])]


def run_sample(trace: Any, q_nash: float, alpha: float = DEFAULT_ALPHA) -> RunSample:
    """Condense a trace into the statistics batch tests use."""
    player_tests = within_run_player_tests(trace, q_nash, alpha) if len(trace.generations) > 1 else []
    return RunSample(params=dict(trace.params), quantity=quantity_stats(trace, trace.n), player_tests=player_tests)


def _batch_key(params: Dict[str, Any]) -> Dict[str, Any]:
    key = dict(params)
    key.pop("seed", None)
    return key


def batch_verdicts(runs: Sequence[Union[RunSample, Any]], q_nash: float, alpha: float = DEFAULT_ALPHA) -> VerdictTable:
    """
    Batch hypothesis tests over independent runs sharing their parameters.

    One test on the run grand means and one per player on the run-level
    player means; within-run player rejections are summarized alongside.

    Args:
        runs: RunSample or RunTrace objects
        q_nash: Nash quantity under test
        alpha: Test size

    Returns:
        VerdictTable (tests are None for batches of fewer than 2 runs)

    Raises:
        ConfigurationError: Empty batch or runs with different parameters
    """
    samples = [r if isinstance(r, RunSample) else run_sample(r, q_nash, alpha) for r in runs]
    if not samples:
        raise ConfigurationError("Cannot test an empty batch")
    key = _batch_key(samples[0].params)
    for sample in samples[1:]:
        if _batch_key(sample.params) != key:
            raise ConfigurationError("Batch mixes runs with different parameters")

    n = len(samples[0].quantity.per_player_means)
    grand_means = [s.quantity.grand_mean_Q for s in samples]
    player_means = np.array([s.quantity.per_player_means for s in samples], dtype=float)

    if len(samples) < 2:
        logger.warning("Batch of a single run: skipping across-run tests")
        grand_verdict, player_verdicts = None, [None] * n
    else:
        grand_verdict = one_sample_mean_test(grand_means, q_nash, alpha)
        player_verdicts = [one_sample_mean_test(player_means[:, i], q_nash, alpha) for i in range(n)]

    within = [v for s in samples for v in s.player_tests]
    rejection_rate = sum(not v.accepted for v in within) / len(within) if within else None
    all_rejected = sum(
        1 for s in samples if s.player_tests and all(not v.accepted for v in s.player_tests)
    )

    return VerdictTable(
        q_nash=float(q_nash),
        alpha=alpha,
        runs=len(samples),
        grand_mean=grand_verdict,
        players=player_verdicts,
        within_run_rejection_rate=rejection_rate,
        runs_with_all_players_rejected=all_rejected,
    )
