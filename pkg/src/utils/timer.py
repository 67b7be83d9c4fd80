"""Wall-clock timing utilities."""
import time
from dataclasses import dataclass, field
from typing import Callable


@dataclass
class TimingResult:
    """Result of a timed operation."""
    name: str
    elapsed_seconds: float

    def __str__(self):
        return f"{self.name}: {self.elapsed_seconds * 1000:.2f}ms"


@dataclass
class Timer:
    """
    Context manager for timing code blocks.

    ``sync`` is called right before reading the clock on entry and exit;
    pass ``device_synchronizer(device)`` so asynchronous GPU work is
    included in the measurement.
    """
    name: str = "operation"
    sync: Callable[[], None] | None = None
    _start: float = field(default=0, repr=False)
    _result: TimingResult | None = field(default=None, repr=False)

    def __enter__(self) -> "Timer":
        if self.sync is not None:
            self.sync()
        self._start = time.perf_counter()
        return self

    def __exit__(self, *args):
        if self.sync is not None:
            self.sync()
        self._result = TimingResult(self.name, time.perf_counter() - self._start)

    @property
    def result(self) -> TimingResult:
        return self._result

    @property
    def elapsed(self) -> float:
        return self._result.elapsed_seconds if self._result else 0


def device_synchronizer(device) -> Callable[[], None] | None:
    """Return a synchronize callback for CUDA devices, None otherwise."""
    import torch

    device = torch.device(device)
    if device.type == "cuda":
        return lambda: torch.cuda.synchronize(device)
    return None
