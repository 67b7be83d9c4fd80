"""Latency benchmarking and result analysis."""
from .runner import BenchmarkRunner, LatencyStats, bench_latency
from .analysis import emit_grid, monotonicity_violations, plot_latency, plot_quality_curve, plot_training_curves

__all__ = [
    "BenchmarkRunner", "LatencyStats", "bench_latency",
    "emit_grid", "monotonicity_violations",
    "plot_latency", "plot_quality_curve", "plot_training_curves",
]
