"""Gauge quality control, station bypass, subgraph extraction, normalization.

Failing stations are not simply dropped: the bypass mechanism reconnects each
upstream neighbor to each downstream neighbor and aggregates channel distance
and elevation difference along the replaced path, so the surviving network
keeps its connectivity and total channel distances.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CsvFormatError, UnknownStation
from .network import Edge, RiverNetwork, build_network

HOUR = np.timedelta64(1, "h")
DEFAULT_COLUMN_MAP = {"timestamp": "timestamp", "discharge": "qobs"}


class GaugeSeries:
    """Hourly discharge (and optional feature channels) for one station."""

    __slots__ = ("station", "timestamps", "discharge", "features")

    def __init__(self, station: int, timestamps, discharge, features=None):
        self.station = int(station)
        self.timestamps = np.asarray(timestamps, dtype="datetime64[s]")
        self.discharge = np.asarray(discharge, dtype=float)
        self.features = {k: np.asarray(v, dtype=float) for k, v in (features or {}).items()}
        if self.timestamps.shape != self.discharge.shape:
            raise ValueError(f"station {station}: {self.timestamps.size} timestamps "
                             f"vs {self.discharge.size} discharge values")
        for name, vals in self.features.items():
            if vals.shape != self.discharge.shape:
                raise ValueError(f"station {station}: feature {name!r} length mismatch")

    def __len__(self) -> int:
        return self.discharge.size

    def channels(self) -> dict[str, np.ndarray]:
        out = {"discharge": self.discharge}
        out.update(self.features)
        return out

    def replace_channels(self, channels: dict[str, np.ndarray]) -> "GaugeSeries":
        feats = {k: v for k, v in channels.items() if k != "discharge"}
        return GaugeSeries(self.station, self.timestamps, channels["discharge"], feats)


@dataclass(frozen=True)
class QCReport:
    """Quality-control verdict for one station; passed is derived."""

    station: int
    negative_count: int
    missing_hours: int
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed",
                           self.negative_count == 0 and self.missing_hours == 0)

    def as_dict(self) -> dict:
        return {"station": self.station, "negative_count": self.negative_count,
                "missing_hours": self.missing_hours, "passed": self.passed}


@dataclass
class NormStats:
    """Per-channel mean and population std; kept so transforms invert exactly."""

    mean: dict[str, float]
    std: dict[str, float]

    def transform(self, values: np.ndarray, channel: str) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean[channel]) / self.std[channel]

    def inverse(self, values: np.ndarray, channel: str) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.std[channel] + self.mean[channel]


# ---------------------------------------------------------------------------
# quality control

def screen_discharge(series: GaugeSeries) -> QCReport:
    """Count strictly negative discharge values; zero is a valid reading."""
    negative = int(np.sum(series.discharge < 0))
    return QCReport(series.station, negative_count=negative, missing_hours=0)


def check_completeness(series: GaugeSeries, period_start, period_end) -> QCReport:
    """Count missing hourly slots over [period_start, period_end).

    A slot counts as present only when an exactly grid-aligned timestamp
    exists; duplicated timestamps are counted as gaps on top, so a series
    that repeats an hour can never pass.
    """
    start = _as_datetime64(period_start)
    end = _as_datetime64(period_end)
    if not start < end:
        raise ValueError(f"period_start {start} must precede period_end {end}")
    expected = int((end - start) // HOUR)

    stamps = series.timestamps
    unique, counts = np.unique(stamps, return_counts=True)
    duplicates = int((counts - 1).sum())
    in_window = unique[(unique >= start) & (unique < end)]
    offsets = (in_window - start) // HOUR
    aligned = in_window[start + offsets * HOUR == in_window]
    missing = expected - aligned.size + duplicates
    return QCReport(series.station, negative_count=0, missing_hours=missing)


def qc_station(series: GaugeSeries, period_start, period_end) -> QCReport:
    """Combined negative-value screen and completeness check."""
    neg = screen_discharge(series).negative_count
    missing = check_completeness(series, period_start, period_end).missing_hours
    return QCReport(series.station, negative_count=neg, missing_hours=missing)


def _as_datetime64(value) -> np.datetime64:
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[s]")
    if isinstance(value, datetime):
        return np.datetime64(value.replace(tzinfo=None), "s")
    return np.datetime64(parse_timestamp(str(value)), "s")


def parse_timestamp(text: str) -> np.datetime64:
    """Parse an ISO-8601 UTC instant ('Z' or '+00:00' suffix or naive)."""
    cleaned = text.strip().replace("Z", "+00:00")
    dt = datetime.fromisoformat(cleaned)
    if dt.tzinfo is not None:
        if dt.utcoffset().total_seconds() != 0:
            raise ValueError(f"timestamp {text!r} is not UTC")
        dt = dt.replace(tzinfo=None)
    return np.datetime64(dt, "s")


# ---------------------------------------------------------------------------
# bypass and subgraph extraction

def bypass_remove(net: RiverNetwork, station: int) -> RiverNetwork:
    """Remove a station while rerouting flow around it.

    Every (upstream -> station) edge pairs with every (station -> downstream)
    edge to form a direct edge whose stream length and elevation difference
    are the sums along the replaced path. When the direct edge already
    exists, the shorter stream length wins.
    """
    if station not in net:
        raise UnknownStation(f"station {station} not in network")

    incoming = net.in_edges(station)
    outgoing = net.out_edges(station)
    kept = {(e.src, e.dst): e for e in net.edges
            if e.src != station and e.dst != station}
    for up in incoming:
        for down in outgoing:
            merged = Edge(up.src, down.dst,
                          up.stream_length + down.stream_length,
                          up.elevation_diff + down.elevation_diff)
            existing = kept.get((merged.src, merged.dst))
            if existing is None or merged.stream_length < existing.stream_length:
                kept[(merged.src, merged.dst)] = merged

    nodes = [node for node in net.nodes if node != station]
    return build_network(nodes, kept.values())


def extract_subgraph(net: RiverNetwork, keep: Iterable[int]) -> RiverNetwork:
    """Bypass every station outside ``keep``, upstream-first, and return the rest."""
    keep_set = set(int(s) for s in keep)
    unknown = keep_set - set(net.nodes)
    if unknown:
        raise UnknownStation(f"keep set references unknown stations {sorted(unknown)}")
    current = net
    for station in _topological_order(net):
        if station not in keep_set:
            current = bypass_remove(current, station)
    return current


def _topological_order(net: RiverNetwork) -> list[int]:
    # upstream first; deterministic by processing smallest-id heads first
    indeg = {node: len(net.in_edges(node)) for node in net.nodes}
    ready = sorted(node for node, k in indeg.items() if k == 0)
    order: list[int] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for e in net.out_edges(node):
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                ready.append(e.dst)
        ready.sort()
    return order


# ---------------------------------------------------------------------------
# normalization

def fit_norm_stats(series_list: Sequence[GaugeSeries], train_end=None) -> NormStats:
    """Pool per-channel statistics across stations.

    ``train_end`` restricts the fit to timestamps strictly before it so that
    test-period values never leak into the statistics.
    """
    cutoff = _as_datetime64(train_end) if train_end is not None else None
    pooled: dict[str, list[np.ndarray]] = {}
    for series in series_list:
        mask = (series.timestamps < cutoff) if cutoff is not None else slice(None)
        for name, vals in series.channels().items():
            pooled.setdefault(name, []).append(vals[mask])

    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name, chunks in pooled.items():
        vals = np.concatenate(chunks)
        if vals.size < 2:
            raise ValueError(f"channel {name!r} needs at least 2 values to normalize")
        mean[name] = float(vals.mean())
        raw_std = float(vals.std())  # population std
        if raw_std == 0.0:
            warnings.warn(f"channel {name!r} has zero variance; passing through unscaled",
                          stacklevel=2)
            raw_std = 1.0
        std[name] = raw_std
    return NormStats(mean=mean, std=std)


def zscore(series_list: Sequence[GaugeSeries],
           train_end=None) -> tuple[list[GaugeSeries], NormStats]:
    """Z-score every channel; returns transformed series plus the statistics."""
    stats = fit_norm_stats(series_list, train_end=train_end)
    return apply_zscore(series_list, stats), stats


def apply_zscore(series_list: Sequence[GaugeSeries], stats: NormStats) -> list[GaugeSeries]:
    out = []
    for series in series_list:
        channels = {name: stats.transform(vals, name)
                    for name, vals in series.channels().items()}
        out.append(series.replace_channels(channels))
    return out


def invert_zscore(series_list: Sequence[GaugeSeries], stats: NormStats) -> list[GaugeSeries]:
    out = []
    for series in series_list:
        channels = {name: stats.inverse(vals, name)
                    for name, vals in series.channels().items()}
        out.append(series.replace_channels(channels))
    return out


# ---------------------------------------------------------------------------
# gauge CSV ingestion

def read_gauge_csv(path, column_map: dict[str, str] | None = None) -> GaugeSeries:
    """Read one station's hourly series; the station id is the file stem.

    The default header is `timestamp,qobs`; ``column_map`` renames the two
    required columns. Any other columns become named feature channels.
    """
    path = Path(path)
    cmap = dict(DEFAULT_COLUMN_MAP)
    if column_map:
        cmap.update(column_map)
    try:
        station = int(path.stem)
    except ValueError:
        raise CsvFormatError(path, 0, f"file stem {path.stem!r} is not an integer gauge id") from None

    stamps: list[np.datetime64] = []
    discharge: list[float] = []
    extras: dict[str, list[float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for required in (cmap["timestamp"], cmap["discharge"]):
            if required not in fields:
                raise CsvFormatError(path, 1, f"missing column {required!r} in header {fields!r}")
        feature_cols = [c for c in fields if c not in (cmap["timestamp"], cmap["discharge"])]
        for lineno, row in enumerate(reader, start=2):
            try:
                stamps.append(parse_timestamp(row[cmap["timestamp"]]))
                discharge.append(float(row[cmap["discharge"]]))
                for col in feature_cols:
                    extras.setdefault(col, []).append(float(row[col]))
            except (ValueError, TypeError) as exc:
                raise CsvFormatError(path, lineno, str(exc)) from None
    return GaugeSeries(station, stamps, discharge, extras)


def write_qc_json(reports: Sequence[QCReport], path) -> None:
    payload = [r.as_dict() for r in reports]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
