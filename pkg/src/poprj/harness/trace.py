"""Per-sweep trace records and their CSV serialisation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

__all__ = ["TRACE_COLUMNS", "MoveCounters", "TraceRecord", "TraceWriter", "read_trace"]

TRACE_COLUMNS = ("sweep", "chain", "k", "log_target", "move_kind", "proposed", "accepted")


class MoveCounters:
    """Cumulative ``(proposed, accepted)`` counts per chain and move kind.

    Outcomes that were not proposed are ignored.  An outcome without a
    chain index is charged to ``default_chain``.
    """

    def __init__(self, n_chains: int):
        self._counts: list[dict[str, list[int]]] = [{} for _ in range(n_chains)]

    @property
    def n_chains(self) -> int:
        return len(self._counts)

    def update(self, outcomes: Iterable, default_chain: int | None = None) -> None:
        for o in outcomes:
            if not o.proposed:
                continue
            chain = o.chain if o.chain is not None else default_chain
            if chain is None:
                raise ValueError(f"outcome {o.kind!r} has no chain index")
            c = self._counts[chain].setdefault(o.kind, [0, 0])
            c[0] += 1
            c[1] += bool(o.accepted)

    def snapshot(self, chain: int) -> tuple[tuple[str, int, int], ...]:
        return tuple((kind, p, a) for kind, (p, a) in sorted(self._counts[chain].items()))

    def as_mapping(self) -> dict[int, dict[str, tuple[int, int]]]:
        return {i: {k: (p, a) for k, (p, a) in c.items()} for i, c in enumerate(self._counts)}

    def reset(self) -> None:
        for c in self._counts:
            c.clear()


def _fmt(x: float) -> str:
    # repr gives the shortest round-tripping form, identical across runs
    return repr(float(x))


@dataclass(frozen=True)
class TraceRecord:
    """One chain after one sweep, with its cumulative move counters."""

    sweep: int
    chain: int
    k: int
    log_target: float
    counters: tuple[tuple[str, int, int], ...] = ()

    def rows(self) -> list[tuple]:
        """Long-format CSV rows: one per move kind, or one blank-kind row before any proposal."""
        head = (self.sweep, self.chain, self.k, _fmt(self.log_target))
        if not self.counters:
            return [head + ("", 0, 0)]
        return [head + c for c in self.counters]


class TraceWriter:
    """Single-writer, append-only trace CSV.

    ``stride`` keeps every ``stride``-th sweep (sweep indices ``0, stride, ...``)
    plus the final one, which the caller marks with ``force=True``.
    """

    def __init__(self, path, stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be at least 1")
        self.path = path
        self.stride = stride
        self._fh = open(path, "w", newline="")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(TRACE_COLUMNS)
        self.n_records = 0

    def wants(self, sweep: int, force: bool = False) -> bool:
        return force or sweep % self.stride == 0

    def write(self, record: TraceRecord) -> None:
        self._csv.writerows(record.rows())
        self.n_records += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trace(path) -> list[dict]:
    """Rows of a trace CSV with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "sweep": int(row["sweep"]),
                "chain": int(row["chain"]),
                "k": int(row["k"]),
                "log_target": float(row["log_target"]),
                "move_kind": row["move_kind"],
                "proposed": int(row["proposed"]),
                "accepted": int(row["accepted"]),
            })
    return out
