"""CSV ingestion and export of transaction logs and daily edge lists.

Two schemas, both plain CSV with an exact header:

* transactions: ``date,borrower,lender,amount`` (ISO dates, plain decimal amounts)
* edge lists:   ``borrower,lender,weight``, one file per day named
  ``edges_YYYY-MM-DD.csv``

Lines starting with ``#`` before the header carry metadata as
``# key: <json>``. Edge files record the full bank universe this way so that
isolated banks survive a round trip.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import re
import sys
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from itertools import groupby
from pathlib import Path
from typing import IO, Iterable, Mapping

from .graph import BankId, InterbankNetwork, Transaction, build_daily_network

TRANSACTION_HEADER = ("date", "borrower", "lender", "amount")
EDGE_HEADER = ("borrower", "lender", "weight")

_PLAIN_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


class IngestError(ValueError):
    """Validation failure with the offending line number (1-based, physical)."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}: " if line is not None else ""
        what = f"field '{field}': " if field else ""
        super().__init__(f"{where}{what}{message}")


@dataclass(frozen=True)
class TransactionLog:
    records: tuple[Transaction, ...]
    span: tuple[dt.date, dt.date] | None

    @property
    def universe(self) -> frozenset[BankId]:
        return frozenset(b for t in self.records for b in (t.borrower, t.lender))

    @property
    def dates(self) -> list[dt.date]:
        return sorted({t.date for t in self.records})

    def total_amount(self) -> Decimal:
        return sum((t.amount for t in self.records), Decimal(0))


def _text(stream) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8"))
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.BufferedIOBase) or "b" in getattr(stream, "mode", ""):
        return io.TextIOWrapper(stream, encoding="utf-8", newline="")
    return stream


def _read_preamble(lines: list[str]) -> tuple[dict, int]:
    """Collect ``# key: value`` lines; return metadata and index of the header line."""
    meta: dict = {}
    pos = 0
    while pos < len(lines) and (lines[pos].startswith("#") or not lines[pos].strip()):
        body = lines[pos][1:].strip() if lines[pos].startswith("#") else ""
        if ":" in body:
            key, _, raw = body.partition(":")
            try:
                meta[key.strip()] = json.loads(raw)
            except json.JSONDecodeError:
                meta[key.strip()] = raw.strip()
        pos += 1
    return meta, pos


def _check_header(row: list[str], expected: tuple[str, ...], line: int) -> None:
    got = tuple(c.strip() for c in row)
    if got == expected:
        return
    extra = [c for c in got if c not in expected]
    missing = [c for c in expected if c not in got]
    detail = []
    if extra:
        detail.append(f"unknown columns {extra}")
    if missing:
        detail.append(f"missing columns {missing}")
    if not detail:
        detail.append(f"columns must appear in order {list(expected)}")
    raise IngestError("bad header: " + "; ".join(detail), line)


def parse_amount(raw: str, line: int | None = None, field: str = "amount") -> Decimal:
    raw = raw.strip()
    if not _PLAIN_DECIMAL.match(raw):
        raise IngestError(f"not a plain decimal number: {raw!r}", line, field)
    try:
        value = Decimal(raw)
    except InvalidOperation:
        raise IngestError(f"not a number: {raw!r}", line, field) from None
    if value <= 0:
        raise IngestError(f"must be positive, got {raw}", line, field)
    return value


def format_amount(value: Decimal) -> str:
    return format(value, "f")


def _rows(text: IO[str], expected: tuple[str, ...]):
    lines = text.read().splitlines()
    meta, pos = _read_preamble(lines)
    if pos >= len(lines):
        return meta, []  # nothing but comments: an empty file
    reader = csv.reader(lines[pos:])
    _check_header(next(reader), expected, pos + 1)
    rows = []
    for offset, row in enumerate(reader, start=pos + 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(expected):
            raise IngestError(f"expected {len(expected)} fields, found {len(row)}", offset)
        rows.append((offset, [c.strip() for c in row]))
    return meta, rows


def parse_transactions(stream) -> TransactionLog:
    """Parse and validate a transaction CSV into a sorted log."""
    _, rows = _rows(_text(stream), TRANSACTION_HEADER)
    records = []
    for line, (d, borrower, lender, amount) in rows:
        try:
            date = dt.date.fromisoformat(d)
        except ValueError:
            raise IngestError(f"not an ISO date: {d!r}", line, "date") from None
        if not borrower:
            raise IngestError("empty bank id", line, "borrower")
        if not lender:
            raise IngestError("empty bank id", line, "lender")
        if borrower == lender:
            raise IngestError(f"borrower equals lender ({borrower!r})", line, "lender")
        records.append(Transaction(date, borrower, lender, parse_amount(amount, line)))
    records.sort(key=lambda t: (t.date, t.borrower, t.lender))
    span = (records[0].date, records[-1].date) if records else None
    return TransactionLog(tuple(records), span)


def read_transactions(path: str | Path) -> TransactionLog:
    """Load a transaction log from ``path``; ``-`` reads standard input."""
    if str(path) == "-":
        return parse_transactions(sys.stdin)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_transactions(fh)


def daily_networks(log: TransactionLog, universe: Iterable[BankId] | None = None) -> list[InterbankNetwork]:
    """One network per trading day present in ``log``, in date order.

    Every network shares the same universe (by default all banks seen
    anywhere in the log), so passive banks count as isolated nodes.
    """
    uni = frozenset(universe) if universe is not None else log.universe
    out = []
    for date, group in groupby(log.records, key=lambda t: t.date):
        out.append(build_daily_network(list(group), date, uni))
    out.sort(key=lambda net: net.date)
    return out


def _meta_lines(meta: Mapping) -> list[str]:
    return [f"# {k}: {json.dumps(v, sort_keys=True, default=str)}" for k, v in meta.items()]


def export_edges(network: InterbankNetwork, sink: IO[str], metadata: Mapping | None = None) -> None:
    """Write ``network`` as an edge-list CSV (metadata preamble, then header and rows)."""
    meta = dict(metadata or {})
    date = network.date
    meta["date"] = date.isoformat() if isinstance(date, dt.date) else date
    meta["universe"] = list(network.universe)
    for line in _meta_lines(meta):
        sink.write(line + "\n")
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(EDGE_HEADER)
    for (i, j), weight in network.edges.items():
        w.writerow((i, j, format_amount(weight)))


def parse_edges(stream, universe: Iterable[BankId] | None = None) -> InterbankNetwork:
    """Inverse of :func:`export_edges`.

    The universe comes from the ``universe`` argument, else the file's
    ``# universe:`` metadata, else the set of edge endpoints.
    """
    meta, rows = _rows(_text(stream), EDGE_HEADER)
    edges: dict[tuple[BankId, BankId], Decimal] = {}
    for line, (i, j, weight) in rows:
        if not i or not j:
            raise IngestError("empty bank id", line, "borrower" if not i else "lender")
        if i == j:
            raise IngestError(f"self-loop on {i!r}", line, "lender")
        if (i, j) in edges:
            raise IngestError(f"duplicate edge {i}->{j}", line)
        edges[(i, j)] = parse_amount(weight, line, "weight")
    if universe is None:
        universe = meta.get("universe")
    if universe is None:
        universe = {b for e in edges for b in e}
    date = meta.get("date")
    if isinstance(date, str):
        try:
            date = dt.date.fromisoformat(date)
        except ValueError:
            pass
    try:
        return InterbankNetwork(universe, edges, date)
    except ValueError as exc:
        raise IngestError(str(exc)) from None


def edge_file_name(network: InterbankNetwork) -> str:
    date = network.date
    label = date.isoformat() if isinstance(date, dt.date) else str(date)
    return f"edges_{label}.csv"


def write_edges(network: InterbankNetwork, directory: str | Path, metadata: Mapping | None = None) -> Path:
    path = Path(directory) / edge_file_name(network)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        export_edges(network, fh, metadata)
    return path


def read_edges(path: str | Path, universe: Iterable[BankId] | None = None) -> InterbankNetwork:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_edges(fh, universe)
