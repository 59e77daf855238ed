"""
Report Renderer Module

This module renders equilibria, run summaries, batch reports, discovery
results and replication checks as rich console tables.
"""

import logging
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.table import Table

from src.analysis.markov import ChainStats
from src.analysis.statistics import RunQuantityStats
from src.encoding.chromosome import QuantityCodec
from src.market.models import MarketModel, NashSolution, Theorem1Check

# Configure logging
logger = logging.getLogger(__name__)


def _fmt(value: Any, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _nonzero_states(freq: List[float]) -> str:
    return ", ".join(f"S{i}={f:.4f}" for i, f in enumerate(freq) if f > 0) or "-"


class ReportRenderer:
    """
    Console renderer for simulator results.
    """

    def __init__(self, console: Optional[Console] = None):
        """
        Initialize the report renderer.

        Args:
            console: Target console; a new stdout console when omitted
        """
        self.console = console or Console()

    def render_nash(
        self,
        model: MarketModel,
        solution: NashSolution,
        codec: QuantityCodec,
        nash_chromosome: str,
        checks: List[Theorem1Check],
        walrasian: Optional[float] = None,
    ) -> None:
        """Print the symmetric equilibrium of a model and the existence checks."""
        table = Table(title=f"Symmetric Nash equilibrium: {model.name}")
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row("players n", str(model.n))
        table.add_row("q_hat", f"{solution.q_hat:.6f}")
        table.add_row("FOC residual", f"{solution.residual:.3e}")
        table.add_row("total Q", f"{model.n * solution.q_hat:.6f}")
        table.add_row("q_max = 3 q_hat", f"{codec.q_max:.6f}")
        table.add_row(f"Nash chromosome (L={codec.L})", nash_chromosome)
        table.add_row("grid resolution", f"{codec.resolution:.6g}")
        if walrasian is not None:
            table.add_row("competitive quantity", f"{walrasian:.6f}")
        self.console.print(table)

        checks_table = Table(title="Existence conditions")
        checks_table.add_column("condition")
        checks_table.add_column("status")
        checks_table.add_column("detail")
        for check in checks:
            status = "assumed" if check.assumed else ("[green]ok[/green]" if check.passed else "[yellow]warning[/yellow]")
            checks_table.add_row(check.name, status, check.detail)
        self.console.print(checks_table)

    def render_run(self, label: str, chain: ChainStats, quantity: RunQuantityStats, q_hat: float) -> None:
        """Print the chain and quantity statistics of one run."""
        table = Table(title=f"Run {label}")
        table.add_column("statistic")
        table.add_column("value", justify="right")
        table.add_row("q_hat", f"{q_hat:.4f}")
        table.add_row("grand mean Q", f"{quantity.grand_mean_Q:.4f}")
        table.add_row("std of per-game mean Q", f"{quantity.std_Q:.4f}")
        for i, q in enumerate(quantity.per_player_means):
            table.add_row(f"mean q_{i + 1}", f"{q:.4f}")
        table.add_row("generations to S0", _fmt(chain.gen_to_ne) if not chain.censored else "censored")
        table.add_row("mean interarrival of S0", _fmt(chain.mean_interarrival, 2))
        table.add_row("NE game share", f"{100 * chain.ne_game_fraction:.2f}%")
        table.add_row("expected lumped state", f"{chain.expected_hamming:.4f}")
        table.add_row("mean Hamming distance to NE", f"{chain.mean_hamming:.4f}")
        table.add_row("lumped frequencies", _nonzero_states(chain.freq))
        self.console.print(table)

    def render_batch(self, report: Dict[str, Any]) -> None:
        """Print the aggregates and verdicts of a batch report."""
        agg = report["aggregates"]
        table = Table(title=f"Batch {report['label']}")
        table.add_column("aggregate")
        table.add_column("value", justify="right")
        table.add_row("runs", str(agg.get("runs", 0)))
        table.add_row("failed runs", str(len(report["failures"])))
        if agg.get("runs"):
            table.add_row("reached S0", str(agg["reached_ne"]))
            table.add_row("censoring rate", f"{agg['censoring_rate']:.3f}")
            table.add_row("mean generations to S0", _fmt(agg["mean_gen_to_ne"], 2))
            table.add_row("median generations to S0", _fmt(agg["median_gen_to_ne"], 1))
            table.add_row("mean interarrival", _fmt(agg["mean_interarrival"], 2))
            table.add_row("NE game share", f"{100 * agg['mean_ne_game_fraction']:.2f}%")
            table.add_row("mean grand mean Q", f"{agg['mean_grand_mean_Q']:.4f}")
            table.add_row("mean Hamming distance to NE", f"{agg['mean_hamming']:.4f}")
            table.add_row("pooled frequencies", _nonzero_states(agg["pooled_freq"]))
        self.console.print(table)

        verdicts = report.get("verdicts")
        if verdicts and verdicts.get("grand_mean"):
            vt = Table(title=f"H0: mean = {verdicts['q_nash']:.4f} (alpha={verdicts['alpha']})")
            vt.add_column("test")
            vt.add_column("mean", justify="right")
            vt.add_column("t", justify="right")
            vt.add_column("critical", justify="right")
            vt.add_column("verdict")
            rows = [("Q", verdicts["grand_mean"])] + [
                (f"q_{i + 1}", v) for i, v in enumerate(verdicts["players"])
            ]
            for name, v in rows:
                verdict = "[green]accepted[/green]" if v["accepted"] else "[red]rejected[/red]"
                vt.add_row(name, f"{v['sample_mean']:.4f}", f"{v['statistic']:.3f}", f"{v['critical_value']:.3f}", verdict)
            self.console.print(vt)
            if verdicts.get("within_run_rejection_rate") is not None:
                self.console.print(
                    f"Within-run player tests rejected: {100 * verdicts['within_run_rejection_rate']:.1f}%"
                )

        for failure in report["failures"]:
            self.console.print(f"[red]seed {failure['seed']}[/red]: {failure['error']}")

    def render_discovery(self, report: Dict[str, Any]) -> None:
        """Print equilibrium candidates found by discovery."""
        if not report["candidates"]:
            self.console.print(f"[yellow]No candidates:[/yellow] {report['note']}")
            return
        table = Table(title=f"Candidates ({report['identical_games']} identical-play games of {report['total_games']})")
        table.add_column("rank", justify="right")
        table.add_column("quantity", justify="right")
        table.add_column("chromosome")
        table.add_column("games", justify="right")
        table.add_column("share", justify="right")
        table.add_column("equilibrium")
        for rank, c in enumerate(report["candidates"], start=1):
            confirmed = "[green]confirmed[/green]" if c["confirmed"] else "no"
            table.add_row(str(rank), f"{c['quantity']:.4f}", c["chromosome"], str(c["games"]), f"{100 * c['share']:.2f}%", confirmed)
        self.console.print(table)

    def render_replication(self, report: Dict[str, Any]) -> None:
        """Print the published and reproduced value of every check."""
        table = Table(title=f"Replication of {report['table']} ({report['scale']} seeds per batch)")
        table.add_column("row")
        table.add_column("check")
        table.add_column("published", justify="right")
        table.add_column("reproduced", justify="right")
        table.add_column("bound")
        table.add_column("result")
        for row in report["rows"]:
            for check in row["checks"]:
                result = "[green]pass[/green]" if check["passed"] else "[red]fail[/red]"
                table.add_row(row["label"], check["name"], _fmt(check["published"]), _fmt(check["reproduced"]), check["bound"], result)
        self.console.print(table)
        for row in report["rows"]:
            if row.get("note"):
                self.console.print(f"[yellow]{row['label']}: {row['note']}[/yellow]")
        status = "[green]all checks passed[/green]" if report["passed"] else "[red]some checks failed[/red]"
        self.console.print(status)
