"""Existence simulation over a chronology.

Each occurrence activates its region for the occurrence interval only;
afterwards the region returns to the static plane. Creates leave a trace
that outlives the occurrence: an exicon (existence container) per thimac
instance, open until a later event terminates it or rebinds its value.

Intervals are closed-open over day ordinals (calendar times) or ticks.
"""

import json
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import common
from tmcore import ActionKind, ActionRef, StaticModel, ThimacPath
from tmevents import (
    SENTINEL,
    EventDecl,
    Occurrence,
    ScheduledOccurrence,
    TimePoint,
    same_instances,
    schedule,
)

log = common.get_logger(__name__)


class SimulationError(common.TmError):
    code = "SimulationError"


class TerminateWithoutExistence(SimulationError):
    code = "TerminateWithoutExistence"


class BindingWithoutCreate(SimulationError):
    code = "BindingWithoutCreate"


class ZeroLengthExistence(SimulationError):
    code = "ZeroLengthExistence"


class NonMonotonicTime(SimulationError):
    code = "NonMonotonicTime"


@dataclass(frozen=True)
class Exicon:
    id: int
    thimac: ThimacPath
    becoming: TimePoint
    end: Optional[TimePoint]
    value: Any
    origin: Occurrence

    @property
    def is_open(self) -> bool:
        return self.end is None

    def contains(self, t: TimePoint) -> bool:
        if not self.becoming.comparable(t) or t.start < self.becoming.start:
            return False
        if self.end is not None:
            return t.start < self.end.start
        return not t.calendar or t.start < SENTINEL.start


@dataclass(frozen=True)
class ExistenceLedger:
    exicons: Tuple[Exicon, ...] = ()

    def for_thimac(self, path: ThimacPath) -> List[Exicon]:
        return [e for e in self.exicons if e.thimac == path]

    def paths(self) -> List[ThimacPath]:
        """Distinct exicon paths in first-becoming order."""
        return list(dict.fromkeys(e.thimac for e in self.exicons))

    def __len__(self) -> int:
        return len(self.exicons)


@dataclass(frozen=True)
class FiredTrigger:
    source: ActionRef
    target: ActionRef
    occurrence: Occurrence

    def __str__(self) -> str:
        return f"{self.source} => {self.target} in {self.occurrence}"


@dataclass(frozen=True)
class TraceEntry:
    occurrence: Occurrence
    event: EventDecl
    time: TimePoint
    start: int
    end: int
    fired: Tuple[FiredTrigger, ...] = ()

    @property
    def actions(self) -> Tuple[ActionRef, ...]:
        return self.event.region.actions

    def active(self, action: ActionRef, t: TimePoint) -> bool:
        return action in self.event.region.action_set and self.time.comparable(t) and self.start <= t.start < self.end


@dataclass(frozen=True)
class Trace:
    entries: Tuple[TraceEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _covers(scope: ThimacPath, path: ThimacPath) -> bool:
    """``path`` is ``scope`` or below it; unselected instances in ``scope`` match any."""
    n = scope.depth
    if path.depth < n or path.segments[:n] != scope.segments:
        return False
    return all(i is None or i == j for i, j in zip(scope.instances, path.instances[:n]))


class _Ledger:
    """Mutable ledger used while a run is in progress."""

    def __init__(self):
        self.exicons: Dict[int, Exicon] = {}
        self.open: Dict[ThimacPath, int] = {}
        self.closed_until: Dict[ThimacPath, int] = {}
        self.next_id = 1

    def become(self, path: ThimacPath, t: TimePoint, value: Any, origin: Occurrence) -> Exicon:
        last = self.closed_until.get(path)
        if last is not None and t.start < last:
            raise NonMonotonicTime(f"{path} would become at {t}, inside an earlier existence")
        exicon = Exicon(self.next_id, path, t, None, value, origin)
        self.next_id += 1
        self.exicons[exicon.id] = exicon
        self.open[path] = exicon.id
        log.debug("exicon %d: %s becomes at %s", exicon.id, path, t)
        return exicon

    def close(self, path: ThimacPath, t: TimePoint) -> Exicon:
        exicon = self.exicons[self.open.pop(path)]
        if not t.comparable(exicon.becoming) or t.start < exicon.becoming.start:
            raise NonMonotonicTime(f"{path} would end at {t}, before becoming at {exicon.becoming}")
        if t.start == exicon.becoming.start:
            raise ZeroLengthExistence(f"{path} would end in the instant it became ({t})")
        closed = replace(exicon, end=t)
        self.exicons[exicon.id] = closed
        self.closed_until[path] = t.start
        return closed

    def rebind(self, path: ThimacPath, value: Any) -> None:
        exicon_id = self.open[path]
        self.exicons[exicon_id] = replace(self.exicons[exicon_id], value=value)

    def freeze(self) -> ExistenceLedger:
        ordered = sorted(self.exicons.values(), key=lambda e: (e.becoming.sort_key(), e.id))
        return ExistenceLedger(tuple(ordered))


def _fired(
    model: StaticModel,
    position: int,
    scheduled: Sequence[ScheduledOccurrence],
) -> Tuple[FiredTrigger, ...]:
    current = scheduled[position]
    fired: List[FiredTrigger] = []
    for action in current.event.region.actions:
        for trigger in model.triggers:
            if trigger.source != action.static():
                continue
            for later in scheduled[position + 1 :]:
                target = next(
                    (
                        a
                        for a in later.event.region.actions
                        if a.static() == trigger.target and same_instances(a.thimac, action.thimac)
                    ),
                    None,
                )
                if target is not None:
                    fired.append(FiredTrigger(action, target, later.occurrence))
                    break
    return tuple(fired)


def _creates_in_order(model: StaticModel, event: EventDecl) -> List[ActionRef]:
    order = model.action_order()
    creates = [a for a in event.region.actions if a.kind is ActionKind.CREATE]
    return sorted(creates, key=lambda a: (order.get(a.static(), len(order)), a.thimac))


def run(
    model: StaticModel,
    events: Sequence[EventDecl],
    occurrences: Iterable[Occurrence],
) -> Tuple[Trace, ExistenceLedger]:
    """Play ``occurrences`` in order and build the trace and exicon ledger.

    Raises:
        TerminateWithoutExistence, BindingWithoutCreate, ZeroLengthExistence,
        NonMonotonicTime, and the event-layer errors of ``schedule``.
    """
    scheduled = schedule(events, list(occurrences))
    ledger = _Ledger()
    entries: List[TraceEntry] = []
    for position, occ in enumerate(scheduled):
        event, t = occ.event, occ.time
        bindings = event.binding_map()
        creates = _creates_in_order(model, event)
        created = {a.thimac for a in creates}
        for path in bindings:
            if path not in created:
                raise BindingWithoutCreate(f"{occ.occurrence} sets {path} but does not create it")

        for action in creates:
            path = action.thimac
            value = bindings.get(path)
            open_id = ledger.open.get(path)
            if open_id is None:
                ledger.become(path, t, value, occ.occurrence)
                continue
            current = ledger.exicons[open_id]
            if path not in bindings or value == current.value:
                continue
            if current.becoming.start == t.start:
                ledger.rebind(path, value)
            else:
                ledger.close(path, t)
                ledger.become(path, t, value, occ.occurrence)

        if event.terminates is not None:
            doomed = [p for p in ledger.open if _covers(event.terminates, p)]
            if not doomed:
                raise TerminateWithoutExistence(
                    f"{occ.occurrence} terminates {event.terminates}, which does not exist at {t}"
                )
            for path in doomed:
                ledger.close(path, t)

        entries.append(TraceEntry(occ.occurrence, event, t, occ.start, occ.end, _fired(model, position, scheduled)))

    trace = Trace(tuple(entries))
    result = ledger.freeze()
    log.info("simulated %d occurrences, %d exicons", len(trace), len(result))
    return trace, result


def exists_at(ledger: ExistenceLedger, thimac: ThimacPath, t: TimePoint) -> Tuple[bool, Any]:
    """Whether ``thimac`` exists at ``t``, with its bound value if any."""
    for exicon in ledger.exicons:
        if exicon.thimac == thimac and exicon.contains(t):
            return True, exicon.value
    return False, None


def active_at(trace: Trace, action: ActionRef, t: TimePoint) -> bool:
    """Whether ``action`` is active at ``t``; outside occurrences everything is static."""
    return any(entry.active(action, t) for entry in trace.entries)


def _show(value: Any) -> str:
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    return str(value)


def dump_ledger(ledger: ExistenceLedger) -> str:
    """One exicon per line: ``id path becoming end [value]``."""
    lines = []
    for e in ledger.exicons:
        line = f"{e.id} {e.thimac} {e.becoming} {e.end if e.end is not None else 'open'}"
        if e.value is not None:
            line += f" {_show(e.value)}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def dump_trace(trace: Trace) -> str:
    lines = []
    for entry in trace.entries:
        line = f"{entry.occurrence} {entry.time} " + ", ".join(str(a) for a in entry.actions)
        for f in entry.fired:
            line += f"\n  fires {f}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)
