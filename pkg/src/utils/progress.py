"""Progress tracking utilities."""
import sys
from tqdm import tqdm
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn, TimeRemainingColumn
from rich.console import Console
from contextlib import contextmanager
from typing import Iterable, Iterator, TypeVar

console = Console(stderr=True)

T = TypeVar("T")


class ProgressTracker:
    """Unified progress tracking for training loops and experiments.

    Rich output is used on an interactive terminal; elsewhere tqdm keeps
    logs readable. ``enabled=False`` silences everything (tests).
    """

    def __init__(self, use_rich: bool | None = None, enabled: bool = True):
        self.use_rich = sys.stderr.isatty() if use_rich is None else use_rich
        self.enabled = enabled

    def iterate(self, iterable: Iterable[T], description: str = "Processing", total: int | None = None) -> Iterator[T]:
        """Wrap an iterable with progress tracking."""
        if not self.enabled:
            yield from iterable
            return
        if total is None and hasattr(iterable, "__len__"):
            total = len(iterable)
        if self.use_rich:
            with Progress(
                SpinnerColumn(),
                TextColumn("[bold blue]{task.description}"),
                BarColumn(),
                TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
                TimeRemainingColumn(),
                console=console,
            ) as progress:
                task = progress.add_task(description, total=total)
                for item in iterable:
                    yield item
                    progress.advance(task)
        else:
            yield from tqdm(iterable, desc=description, total=total, file=sys.stderr)

    @contextmanager
    def task(self, description: str):
        """Context manager for a single task with spinner."""
        if not self.enabled:
            yield
            return
        if self.use_rich:
            with console.status(f"[bold green]{description}..."):
                yield
            console.print(f"[green]✓[/green] {description} complete")
        else:
            print(f"Starting: {description}", file=sys.stderr)
            yield
            print(f"Complete: {description}", file=sys.stderr)

    def log(self, message: str, style: str = ""):
        """Print a styled message."""
        if not self.enabled:
            return
        if self.use_rich:
            console.print(message, style=style)
        else:
            print(message, file=sys.stderr)
