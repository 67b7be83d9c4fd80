"""Structured logging setup using structlog."""
import logging
import sys
from pathlib import Path
import structlog


def setup_logging(log_level: str = "INFO", log_file: Path | None = None):
    """Configure structured logging.

    Console output is pretty-printed on a TTY and JSON otherwise. When
    ``log_file`` is given, events are also written there as JSON lines.
    """
    level = getattr(logging, log_level.upper())

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stdout,
        level=level,
        force=True,
    )

    shared = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if sys.stderr.isatty() and log_file is None:
        renderer = structlog.dev.ConsoleRenderer(colors=True)
    else:
        renderer = structlog.processors.JSONRenderer()

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        logging.getLogger().addHandler(file_handler)
        # Route through stdlib so both stdout and the file handler see events
        factory = structlog.stdlib.LoggerFactory()
        wrapper = structlog.stdlib.BoundLogger
        processors = [structlog.stdlib.filter_by_level, *shared, renderer]
    else:
        factory = structlog.PrintLoggerFactory()
        wrapper = structlog.make_filtering_bound_logger(level)
        processors = [*shared, renderer]

    structlog.configure(
        processors=processors,
        wrapper_class=wrapper,
        context_class=dict,
        logger_factory=factory,
        cache_logger_on_first_use=False,
    )


def get_logger(name: str | None = None) -> structlog.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


# Convenience loggers for different subsystems
def training_logger():
    return get_logger("training")

def sampler_logger():
    return get_logger("sampler")

def data_logger():
    return get_logger("data")

def benchmark_logger():
    return get_logger("benchmark")
