"""
Benchmark Runner.

Wall-clock latency of the samplers on one model and one batch of
conditions. Every method runs warmup calls that are discarded, then at
least three timed repetitions; device work is synchronized before each
clock read. Methods run one after another.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd
import torch
import torch.nn as nn

from ..diffusion.schedule import NoiseSchedule
from ..samplers.base import SampleResult
from ..samplers.factory import make_sampler
from ..utils.config import ConsistencyParams, settings
from ..utils.errors import InvalidRangeError
from ..utils.logging import benchmark_logger
from ..utils.progress import ProgressTracker
from ..utils.serialization import ResultsSerializer
from ..utils.timer import Timer, device_synchronizer

MIN_REPS = 3

logger = benchmark_logger()


@dataclass
class LatencyStats:
    """Timing of one sampler configuration, in seconds."""
    method: str
    n_evals: int
    reps: int
    median_s: float
    mean_s: float
    std_s: float

    @property
    def per_eval_s(self) -> float:
        return self.median_s / self.n_evals if self.n_evals else float("nan")

    def to_row(self) -> dict:
        return {
            "method": self.method,
            "steps": self.n_evals,
            "reps": self.reps,
            "median_ms": self.median_s * 1e3,
            "mean_ms": self.mean_s * 1e3,
            "std_ms": self.std_s * 1e3,
            "per_eval_ms": self.per_eval_s * 1e3,
        }


def bench_latency(
    sample_fn: Callable[[], SampleResult | int | None],
    reps: int = 5,
    warmup: int = 1,
    n_evals: int | None = None,
    method: str = "custom",
    sync: Callable[[], None] | None = None,
) -> LatencyStats:
    """
    Time ``sample_fn`` ``reps`` times after ``warmup`` discarded calls.

    The evaluation count is taken from ``n_evals``, else from a returned
    SampleResult or int.

    Raises:
        InvalidRangeError: fewer than three repetitions or negative warmup.
    """
    if reps < MIN_REPS:
        raise InvalidRangeError(f"reps must be >= {MIN_REPS}, got {reps}")
    if warmup < 0:
        raise InvalidRangeError(f"warmup must be >= 0, got {warmup}")
    for _ in range(warmup):
        sample_fn()

    times = []
    observed = None
    for _ in range(reps):
        with Timer(method, sync=sync) as timer:
            out = sample_fn()
        times.append(timer.elapsed)
        if isinstance(out, SampleResult):
            observed = out.n_evals
        elif isinstance(out, int):
            observed = out
    times = np.asarray(times)
    return LatencyStats(
        method=method,
        n_evals=int(n_evals if n_evals is not None else (observed or 0)),
        reps=reps,
        median_s=float(np.median(times)),
        mean_s=float(np.mean(times)),
        std_s=float(np.std(times)),
    )


class BenchmarkRunner:
    """Run latency benchmarks for a list of sampler specs and collect results."""

    def __init__(self, output_dir: Path | None = None, progress: ProgressTracker | None = None):
        self.output_dir = Path(output_dir or settings.paths.runs_dir / "bench")
        self.results: list[LatencyStats] = []
        self.progress = progress or ProgressTracker(enabled=False)
        self.serializer = ResultsSerializer(self.output_dir)

    def run(
        self,
        model: nn.Module,
        sched: NoiseSchedule,
        params: ConsistencyParams,
        cond: torch.Tensor,
        methods: Sequence[str],
        reps: int = 5,
        warmup: int = 1,
        seed: int = 0,
    ) -> pd.DataFrame:
        """Benchmark every method spec (``ancestral``, ``ddim:100``, ``consistency:8``...)."""
        self.results.clear()
        sync = device_synchronizer(cond.device)
        for spec in self.progress.iterate(list(methods), "Benchmarking"):
            sampler = make_sampler(spec, sched, params)

            def call(sampler=sampler) -> SampleResult:
                return sampler.sample(model, cond, seed=seed)

            stats = bench_latency(call, reps=reps, warmup=warmup, method=sampler.name, sync=sync)
            self.results.append(stats)
            logger.info("latency_measured", **stats.to_row())
        return self.to_dataframe()

    def to_dataframe(self) -> pd.DataFrame:
        """Results table with speedup relative to ancestral sampling (when measured)."""
        df = pd.DataFrame([r.to_row() for r in self.results])
        if df.empty:
            return df
        baseline = df.loc[df["method"] == "ancestral", "median_ms"]
        df["speedup_vs_ancestral"] = baseline.iloc[0] / df["median_ms"] if not baseline.empty else np.nan
        return df

    def save_results(self, filename: str = "latency.csv") -> Path:
        """Save results to CSV."""
        df = self.to_dataframe()
        filepath = self.output_dir / filename
        df.to_csv(filepath, index=False)
        return filepath
