"""Deterministic virtual-clock simulation of KPI report traffic.

Every planned stream emits at t = 0, T, 2T, ... below the horizon, all
phase-aligned at t = 0. Each subscribed xApp consumes at its own
requested period and records the age of the newest sample available
from its assigned stream at every consumer tick. Message and byte
accounting follows the configured batching rule.

All emission and consumption instants are known up front, so the event
loop is realized as a per-stream tick enumeration aggregated in
(time, node, period) order; reports are byte-identical across runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .e2model import E2NodeId, KpiDemand, KpiId, XAppId
from .merge import StreamSpec, TransmissionPlan


class Batching(str, Enum):
    # One message per node per instant, carrying every sample due then.
    PER_NODE_PERIOD = "per_node_period"
    # One message per stream tick.
    PER_STREAM = "per_stream"


@dataclass(frozen=True)
class SimConfig:
    horizon_ms: int
    header_bytes: int = 0
    bytes_per_sample: int = 1000
    batching: Batching = Batching.PER_NODE_PERIOD

    def __post_init__(self) -> None:
        if self.horizon_ms < 1:
            raise ValueError(f"horizon must be >= 1 ms: {self.horizon_ms}")
        if self.header_bytes < 0:
            raise ValueError(f"header bytes must be >= 0: {self.header_bytes}")
        if self.bytes_per_sample < 1:
            raise ValueError(f"bytes per sample must be >= 1: {self.bytes_per_sample}")


@dataclass
class SimReport:
    messages_sent: int
    samples_sent: int
    bytes_sent: int
    per_xapp_max_staleness: dict[XAppId, int] = field(default_factory=dict)
    per_stream_sample_counts: dict[StreamSpec, int] = field(default_factory=dict)

    def to_json(self) -> str:
        """Stable JSON rendering for golden-file comparison.

        Stream keys are "node:kpi:period_ms"; all maps are sorted by key
        (lexicographically for the rendered string keys).
        """
        doc = {
            "messages_sent": self.messages_sent,
            "samples_sent": self.samples_sent,
            "bytes_sent": self.bytes_sent,
            "per_xapp_max_staleness": {
                str(x): s for x, s in sorted(self.per_xapp_max_staleness.items())
            },
            "per_stream_sample_counts": {
                f"{s.node}:{s.kpi}:{s.period_ms}": c
                for s, c in sorted(
                    self.per_stream_sample_counts.items(),
                    key=lambda kv: (kv[0].node, kv[0].kpi, kv[0].period_ms),
                )
            },
        }
        return json.dumps(doc, sort_keys=True)


def staleness_oracle(sample_period_ms: int, consume_period_ms: int) -> int:
    """Brute-force worst-case sample age over one hyperperiod.

    Walks every consumer tick in [0, lcm) and takes the maximum distance
    to the newest sample emitted at or before it, both grids aligned at
    t = 0. Serves as the independent check for the closed-form bound.
    """
    hyper = math.lcm(sample_period_ms, consume_period_ms)
    worst = 0
    for tick in range(0, hyper, consume_period_ms):
        newest_sample = (tick // sample_period_ms) * sample_period_ms
        worst = max(worst, tick - newest_sample)
    return worst


def _assignments(
    plans: Iterable[TransmissionPlan], demands: Iterable[KpiDemand]
) -> list[tuple[KpiDemand, StreamSpec]]:
    """Pair every demand with the stream serving it; reject gaps."""
    by_key: dict[tuple[E2NodeId, KpiId, XAppId], StreamSpec] = {}
    for plan in plans:
        for xapp, index in plan.fanout.items():
            stream = plan.streams[index]
            key = (stream.node, stream.kpi, xapp)
            if key in by_key:
                raise ValueError(f"xApp {xapp} served twice for {key[:2]}")
            by_key[key] = stream
    pairs = []
    for demand in demands:
        key = (demand.node, demand.kpi, demand.xapp)
        if key not in by_key:
            raise ValueError(
                f"demand not served by any plan: xApp {demand.xapp}, "
                f"node {demand.node}, KPI {demand.kpi!r}"
            )
        pairs.append((demand, by_key[key]))
    return pairs


def run(
    plans: Iterable[TransmissionPlan],
    demands: Iterable[KpiDemand],
    cfg: SimConfig,
) -> SimReport:
    plans = list(plans)
    demands = list(demands)
    pairs = _assignments(plans, demands)

    streams = [s for plan in plans for s in plan.streams]
    for stream in streams:
        if stream.period_ms > cfg.horizon_ms:
            raise ValueError(
                f"horizon {cfg.horizon_ms} ms shorter than stream period "
                f"{stream.period_ms} ms ({stream.node}:{stream.kpi})"
            )

    horizon = cfg.horizon_ms
    report = SimReport(0, 0, 0)
    # Emission accounting. Sample count per stream is the number of
    # ticks 0, T, 2T, ... strictly below the horizon.
    samples_per_instant: dict[tuple[int, E2NodeId], int] = {}
    for stream in sorted(streams, key=lambda s: (s.node, s.kpi, s.period_ms)):
        ticks = (horizon - 1) // stream.period_ms + 1
        # Exact-duplicate streams (several plans, one spec) accumulate.
        report.per_stream_sample_counts[stream] = (
            report.per_stream_sample_counts.get(stream, 0) + ticks
        )
        report.samples_sent += ticks
        if cfg.batching is Batching.PER_STREAM:
            report.messages_sent += ticks
            report.bytes_sent += ticks * (cfg.header_bytes + cfg.bytes_per_sample)
        else:
            for t in range(0, horizon, stream.period_ms):
                key = (t, stream.node)
                samples_per_instant[key] = samples_per_instant.get(key, 0) + 1
    if cfg.batching is Batching.PER_NODE_PERIOD:
        report.messages_sent = len(samples_per_instant)
        report.bytes_sent = (
            report.messages_sent * cfg.header_bytes
            + report.samples_sent * cfg.bytes_per_sample
        )

    # Consumption: each xApp ticks on its own requested grid and sees the
    # newest sample from its assigned stream. t = 0 alignment makes the
    # first tick fresh by construction.
    for demand, stream in pairs:
        period = stream.period_ms
        worst = report.per_xapp_max_staleness.get(demand.xapp, 0)
        for tick in range(0, horizon, demand.period_ms):
            newest_sample = (tick // period) * period
            worst = max(worst, tick - newest_sample)
        report.per_xapp_max_staleness[demand.xapp] = worst
    report.per_xapp_max_staleness = dict(sorted(report.per_xapp_max_staleness.items()))
    return report
