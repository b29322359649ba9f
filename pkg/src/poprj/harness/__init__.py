"""Experiment harness: configuration, runs, traces and diagnostics."""

from .config import KINDS, ConfigError, RunConfig, load_config, parse_config
from .diagnostics import (
    EssResult,
    acceptance_report,
    autocorrelation,
    efficiency_E,
    ess,
    ess_report,
    exchange_success_fraction,
)
from .runner import RunResult, run
from .trace import TRACE_COLUMNS, MoveCounters, TraceRecord, TraceWriter, read_trace

__all__ = [
    "KINDS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "EssResult",
    "acceptance_report",
    "autocorrelation",
    "efficiency_E",
    "ess",
    "ess_report",
    "exchange_success_fraction",
    "RunResult",
    "run",
    "TRACE_COLUMNS",
    "MoveCounters",
    "TraceRecord",
    "TraceWriter",
    "read_trace",
]
