"""Per-(node, KPI) subscription merge engine.

For every (E2 node, KPI) pair the engine keeps the set of active xApp
demands and derives a transmission plan: which physical report streams
the node must emit, and which stream feeds each xApp. Decisions between
two report periods follow a fixed order:

1. identical periods share one stream (dedup);
2. divisible periods share the faster stream, which the slower consumer
   reads with zero staleness;
3. non-divisible periods may still share the faster stream when the
   slower side declared a staleness tolerance that exceeds the
   worst-case sample age;
4. otherwise one merged stream at the gcd of the periods is chosen when
   it needs fewer samples per hyperperiod than serving every involved
   xApp at its own period, and failing that both streams are kept
   (duplicate transmission).

With exactly two demands the gcd option never wins: for periods g*a and
g*b with coprime a, b >= 2 the merged stream needs a*b samples against
a+b for the pair, and a*b >= a+b. It becomes profitable only once three
or more demands accumulate on a stream, which is why plans are rebuilt
from the full demand set (including a stream consolidation pass) rather
than patched incrementally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, NamedTuple

from .e2model import E2NodeId, KpiDemand, KpiId, XAppId


class DuplicateDemandError(ValueError):
    """An active demand already exists for this (xApp, node, KPI)."""


class UnknownDemandError(LookupError):
    """No active demand exists for this (xApp, node, KPI)."""


class DecisionKind(str, Enum):
    DEDUP = "dedup"
    MIN_PERIOD = "min_period"
    GCD_MERGE = "gcd_merge"
    DUPLICATE = "duplicate"


class SampleCounts(NamedTuple):
    """Samples per hyperperiod: one merged stream at the gcd versus one
    stream at each of the two periods."""

    merged: int
    first: int
    second: int


def streams_sample_rate(streams: Iterable["StreamSpec"]) -> Fraction:
    """Exact samples per second of a stream collection."""
    by_period: dict[int, int] = {}
    for stream in streams:
        by_period[stream.period_ms] = by_period.get(stream.period_ms, 0) + 1
    rate = Fraction(0)
    for period, count in by_period.items():
        rate += Fraction(1000 * count, period)
    return rate


def max_staleness(ti_ms: int, tj_ms: int) -> int:
    """Worst-case sample age seen by the slower consumer when the KPI is
    sampled at the faster period, both phase-aligned at t=0.

    Equals min(ti, tj) - gcd(ti, tj).
    """
    return min(ti_ms, tj_ms) - math.gcd(ti_ms, tj_ms)


def sample_counts(ti_ms: int, tj_ms: int) -> SampleCounts:
    """Exact sample counts over one hyperperiod lcm(ti, tj)."""
    lcm = math.lcm(ti_ms, tj_ms)
    gcd = math.gcd(ti_ms, tj_ms)
    return SampleCounts(lcm // gcd, lcm // ti_ms, lcm // tj_ms)


@dataclass(frozen=True)
class MergeDecision:
    """Outcome of comparing two report-period requests for one KPI.

    ``staleness_ms`` is set whenever the periods were not divisible;
    ``counts`` is set whenever the sample-count comparison ran.
    ``chosen_period_ms`` is absent for DUPLICATE (both streams kept).
    """

    kind: DecisionKind
    chosen_period_ms: int | None
    staleness_ms: int | None = None
    counts: SampleCounts | None = None


def decide_pair(
    existing: tuple[int, int | None], incoming: tuple[int, int | None]
) -> MergeDecision:
    """Decide how to serve two demands for the same (node, KPI).

    Each side is a (period_ms, sensitivity_ms) pair; the sensitivity of
    the slower side gates the shared-stream option for non-divisible
    periods. A missing sensitivity means no tolerance was declared.
    """
    ti, si = existing
    tj, sj = incoming
    if ti == tj:
        return MergeDecision(DecisionKind.DEDUP, ti)
    if ti % tj == 0 or tj % ti == 0:
        return MergeDecision(DecisionKind.MIN_PERIOD, min(ti, tj))
    staleness = max_staleness(ti, tj)
    slow_sensitivity = si if ti > tj else sj
    if slow_sensitivity is not None and staleness < slow_sensitivity:
        return MergeDecision(DecisionKind.MIN_PERIOD, min(ti, tj), staleness)
    counts = sample_counts(ti, tj)
    if counts.merged < counts.first + counts.second:
        return MergeDecision(
            DecisionKind.GCD_MERGE, math.gcd(ti, tj), staleness, counts
        )
    return MergeDecision(DecisionKind.DUPLICATE, None, staleness, counts)


@dataclass(frozen=True)
class StreamSpec:
    """One physical KPI report stream emitted by a node."""

    node: E2NodeId
    kpi: KpiId
    period_ms: int

    def __post_init__(self) -> None:
        if self.period_ms < 1:
            raise ValueError(f"stream period must be >= 1 ms: {self.period_ms}")


@dataclass(frozen=True)
class TransmissionPlan:
    """The streams chosen for one (node, KPI) pair plus the fan-out map
    from each subscribed xApp to the index of the stream serving it."""

    streams: tuple[StreamSpec, ...]
    fanout: dict[XAppId, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "streams", tuple(self.streams))
        streams = self.streams
        if not streams:
            raise ValueError("plan must contain at least one stream")
        first = streams[0]
        for s in streams[1:]:
            if s.node != first.node or s.kpi != first.kpi:
                raise ValueError("plan streams must share one (node, KPI) pair")
        if len({s.period_ms for s in streams}) != len(streams):
            raise ValueError("plan streams must have distinct periods")
        if not self.fanout or set(self.fanout.values()) != set(range(len(streams))):
            raise ValueError(
                "fan-out must cover every stream with at least one xApp "
                "and reference only existing streams"
            )

    def stream_for(self, xapp: XAppId) -> StreamSpec:
        return self.streams[self.fanout[xapp]]


class ChangeAction(str, Enum):
    ADDED = "added"
    REMOVED = "removed"
    RETIMED = "retimed"


@dataclass(frozen=True)
class StreamChange:
    """One plan edit; RETIMED carries the stream it replaces."""

    action: ChangeAction
    stream: StreamSpec
    previous: StreamSpec | None = None


@dataclass
class _Stream:
    """Mutable fold state: current period plus the demands assigned so far.

    The period only ever moves to a value dividing at least one member's
    requested period, so hyperperiods over member periods stay integral.
    """

    period_ms: int
    members: list[KpiDemand] = field(default_factory=list)

    def sort_key(self) -> tuple[int, int, int]:
        anchor = min((m.period_ms, m.xapp) for m in self.members)
        return (self.period_ms, *anchor)


def _effective_sensitivity(stream: _Stream, candidate_period_ms: int) -> int | None:
    """Tolerance of a stream treated as the slower side of a merge.

    The minimum declared tolerance over members whose requested period
    exceeds the candidate merged period; absent as soon as any such
    member declared none (conservative: their tolerance is unknown).
    """
    tolerances = []
    for member in stream.members:
        if member.period_ms > candidate_period_ms:
            if member.sensitivity_ms is None:
                return None
            tolerances.append(member.sensitivity_ms)
    return min(tolerances) if tolerances else None


def _split_cost(periods: list[int], hyperperiod: int) -> int:
    return sum(hyperperiod // p for p in periods)


def _try_join(stream: _Stream, demand: KpiDemand) -> bool:
    """Attempt to serve ``demand`` from ``stream``, retiming it if needed.

    The sample-count test compares one merged stream at the gcd against
    serving every involved xApp at its own requested period, over the
    joint hyperperiod of those periods.
    """
    period, requested = stream.period_ms, demand.period_ms
    joined = False
    if requested % period == 0:
        joined = True
    elif period % requested == 0:
        stream.period_ms = requested
        joined = True
    else:
        if requested > period:
            tolerance = demand.sensitivity_ms
            retime_to = None
        else:
            tolerance = _effective_sensitivity(stream, requested)
            retime_to = requested
        if tolerance is not None and max_staleness(period, requested) < tolerance:
            if retime_to is not None:
                stream.period_ms = retime_to
            joined = True
        else:
            merged_period = math.gcd(period, requested)
            member_periods = [m.period_ms for m in stream.members] + [requested]
            hyper = math.lcm(*member_periods)
            if hyper // merged_period < _split_cost(member_periods, hyper):
                stream.period_ms = merged_period
                joined = True
    if joined:
        stream.members.append(demand)
    return joined


def _try_consolidate(fast: _Stream, slow: _Stream) -> bool:
    """Attempt to collapse two streams into ``fast``; same decision order
    as joining a demand, with the slow stream's members moving over."""
    p_fast, p_slow = fast.period_ms, slow.period_ms
    merged_period = None
    if p_slow % p_fast == 0:
        merged_period = p_fast
    else:
        tolerance = _effective_sensitivity(slow, p_fast)
        if tolerance is not None and max_staleness(p_fast, p_slow) < tolerance:
            merged_period = p_fast
        else:
            gcd = math.gcd(p_fast, p_slow)
            member_periods = [m.period_ms for m in fast.members + slow.members]
            hyper = math.lcm(*member_periods)
            if hyper // gcd < _split_cost(member_periods, hyper):
                merged_period = gcd
    if merged_period is None:
        return False
    fast.period_ms = merged_period
    fast.members.extend(slow.members)
    return True


def _build_streams(demands: list[KpiDemand]) -> list[_Stream]:
    """Deterministic rebuild of the stream set for one (node, KPI).

    Demands are folded in (period, xApp id) order; each joins the first
    stream (period-ascending) that admits it, else opens its own. A
    consolidation pass then collapses stream pairs under the same rules
    until no pair can merge, which is what lets three or more demands
    end up on a single gcd-period stream.
    """
    if len(demands) == 1:
        return [_Stream(demands[0].period_ms, [demands[0]])]
    streams: list[_Stream] = []
    for demand in sorted(demands, key=lambda d: (d.period_ms, d.xapp)):
        streams.sort(key=_Stream.sort_key)
        if not any(_try_join(stream, demand) for stream in streams):
            streams.append(_Stream(demand.period_ms, [demand]))
    merged = True
    while merged:
        merged = False
        streams.sort(key=_Stream.sort_key)
        for i in range(len(streams)):
            for j in range(i + 1, len(streams)):
                if _try_consolidate(streams[i], streams[j]):
                    del streams[j]
                    merged = True
                    break
            if merged:
                break
    streams.sort(key=_Stream.sort_key)
    return streams


def _plan_from_streams(node: E2NodeId, kpi: KpiId, streams: list[_Stream]) -> TransmissionPlan:
    specs = tuple(StreamSpec(node, kpi, s.period_ms) for s in streams)
    fanout = {m.xapp: i for i, s in enumerate(streams) for m in s.members}
    return TransmissionPlan(specs, fanout)


def _diff_plans(
    old: TransmissionPlan | None, new: TransmissionPlan | None
) -> list[StreamChange]:
    """Describe the edit from ``old`` to ``new`` by stream period.

    Disappearing and appearing periods are paired up (ascending) as
    retimes; the leftovers are plain removals or additions. Streams kept
    at the same period need no node-side action even if their fan-out
    changed.
    """
    old_streams = {s.period_ms: s for s in (old.streams if old else ())}
    new_streams = {s.period_ms: s for s in (new.streams if new else ())}
    gone = sorted(p for p in old_streams if p not in new_streams)
    fresh = sorted(p for p in new_streams if p not in old_streams)
    changes = []
    for old_p, new_p in zip(gone, fresh):
        changes.append(
            StreamChange(ChangeAction.RETIMED, new_streams[new_p], old_streams[old_p])
        )
    for period in gone[len(fresh):]:
        changes.append(StreamChange(ChangeAction.REMOVED, old_streams[period]))
    for period in fresh[len(gone):]:
        changes.append(StreamChange(ChangeAction.ADDED, new_streams[period]))
    return changes


class MergeState:
    """Active demands and derived plans for all (node, KPI) pairs.

    Single-owner value: calls must be externally serialized per RIC
    instance. Adding an exactly identical demand again is a no-op (the
    new request is ignored, data access is already in place); an active
    demand with the same key but different parameters is rejected.
    """

    def __init__(self) -> None:
        self._demands: dict[tuple[E2NodeId, KpiId], dict[XAppId, KpiDemand]] = {}
        self._plans: dict[tuple[E2NodeId, KpiId], TransmissionPlan] = {}

    def demand_count(self) -> int:
        return sum(len(v) for v in self._demands.values())

    def plan_for(self, node: E2NodeId, kpi: KpiId) -> TransmissionPlan | None:
        return self._plans.get((node, kpi))

    def plans(self) -> dict[tuple[E2NodeId, KpiId], TransmissionPlan]:
        return dict(self._plans)

    def demands(self) -> list[KpiDemand]:
        return [d for group in self._demands.values() for d in group.values()]

    def add_demand(self, demand: KpiDemand) -> list[StreamChange]:
        return self.add_demands([demand])

    def add_demands(self, demands: Iterable[KpiDemand]) -> list[StreamChange]:
        """Insert demands atomically, recomputing each touched plan once.

        Either every demand is admitted (exactly identical re-submissions
        are ignored) or the state is left untouched.
        """
        pending: dict[tuple[E2NodeId, KpiId, XAppId], KpiDemand] = {}
        for demand in demands:
            key = (demand.node, demand.kpi, demand.xapp)
            active = self._demands.get(key[:2], {}).get(demand.xapp)
            conflicting = pending.get(key, active)
            if conflicting is not None and conflicting != demand:
                raise DuplicateDemandError(
                    f"xApp {demand.xapp} already subscribes to {demand.kpi!r} "
                    f"on node {demand.node}"
                )
            if active != demand:
                pending[key] = demand
        for (node, kpi, xapp), demand in pending.items():
            self._demands.setdefault((node, kpi), {})[xapp] = demand
        changes = []
        for key in sorted({(node, kpi) for node, kpi, _ in pending}):
            changes.extend(self._recompute(key))
        return changes

    def remove_demand(self, xapp: XAppId, node: E2NodeId, kpi: KpiId) -> list[StreamChange]:
        key = (node, kpi)
        group = self._demands.get(key, {})
        if xapp not in group:
            raise UnknownDemandError(
                f"no active demand for xApp {xapp} on {kpi!r} at node {node}"
            )
        del group[xapp]
        if not group:
            del self._demands[key]
        return self._recompute(key)

    def remove_xapp(self, xapp: XAppId) -> list[StreamChange]:
        """Drop every demand of one xApp (e.g. on disconnect)."""
        changes = []
        for node, kpi in [k for k, g in self._demands.items() if xapp in g]:
            changes.extend(self.remove_demand(xapp, node, kpi))
        return changes

    def total_sample_rate(self) -> Fraction:
        """Aggregate samples per second over all planned streams."""
        return streams_sample_rate(
            s for plan in self._plans.values() for s in plan.streams
        )

    def _recompute(self, key: tuple[E2NodeId, KpiId]) -> list[StreamChange]:
        old = self._plans.get(key)
        group = self._demands.get(key)
        if not group:
            self._plans.pop(key, None)
            return _diff_plans(old, None)
        node, kpi = key
        new = _plan_from_streams(node, kpi, _build_streams(list(group.values())))
        self._plans[key] = new
        return _diff_plans(old, new)
