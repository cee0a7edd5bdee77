"""Events: regions of the static model merged with time.

A region is a connected subdiagram of the static model; an event is a
region plus a time point. A chronology orders event occurrences, possibly
repeating groups of events a fixed number of times.
"""

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import common
from tmcore import ActionKind, ActionRef, Arc, FlowArc, StaticModel, ThimacPath, TriggerArc

log = common.get_logger(__name__)

Literal = Union[int, str]

SENTINEL_DATE = dt.date(9999, 12, 31)


class EventError(common.TmError):
    code = "EventError"


class InvalidTime(EventError):
    code = "InvalidTime"


class CyclicOrder(EventError):
    code = "CyclicOrder"

    def __init__(self, cycle: Sequence[str]):
        self.cycle = tuple(cycle)
        super().__init__("events precede each other: " + ", ".join(self.cycle))


class MixedGranularityRepeat(EventError):
    code = "MixedGranularityRepeat"


class UnknownEvent(EventError):
    code = "UnknownEvent"


class Granularity(Enum):
    DAY = "day"
    YEAR = "year"
    TICK = "tick"


_LAST_ORDINAL = dt.date.max.toordinal()


def _year_start(year: int) -> int:
    """Day ordinal of 1 January ``year``; years past 9999 continue at 365 days each."""
    if year <= 9999:
        return dt.date(year, 1, 1).toordinal()
    return _LAST_ORDINAL + 1 + (year - 10000) * 365


@dataclass(frozen=True)
class TimePoint:
    """A day, a whole calendar year, or an abstract tick.

    Days and years share one calendar axis (day ordinals), so a year
    contains its days; ticks live on their own axis.
    """

    granularity: Granularity
    value: Union[dt.date, int]

    def __post_init__(self):
        g, v = self.granularity, self.value
        if g is Granularity.DAY:
            if not isinstance(v, dt.date) or isinstance(v, dt.datetime):
                raise InvalidTime(f"day time points need a date, got {v!r}")
        elif g is Granularity.YEAR:
            if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 9999:
                raise InvalidTime(f"year out of range: {v!r}")
        else:
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise InvalidTime(f"ticks are non-negative integers, got {v!r}")

    @classmethod
    def day(cls, year: int, month: int, day: int) -> "TimePoint":
        try:
            return cls(Granularity.DAY, dt.date(year, month, day))
        except ValueError as e:
            raise InvalidTime(str(e)) from None

    @classmethod
    def year(cls, year: int) -> "TimePoint":
        return cls(Granularity.YEAR, year)

    @classmethod
    def tick(cls, n: int) -> "TimePoint":
        return cls(Granularity.TICK, n)

    @classmethod
    def parse(cls, text: str) -> "TimePoint":
        """``YYYY-MM-DD``, ``YYYY`` or a bare tick count (``tick N`` also accepted)."""
        text = text.strip()
        if text.startswith("tick"):
            rest = text[4:].strip()
            if rest.isdigit():
                return cls.tick(int(rest))
            raise InvalidTime(f"bad tick literal: {text!r}")
        if len(text) == 10 and text[4] == "-" and text[7] == "-":
            y, m, d = text[:4], text[5:7], text[8:]
            if y.isdigit() and m.isdigit() and d.isdigit():
                return cls.day(int(y), int(m), int(d))
        if text.isdigit():
            if len(text) == 4:
                return cls.year(int(text))
            return cls.tick(int(text))
        raise InvalidTime(f"not a time literal: {text!r}")

    @property
    def calendar(self) -> bool:
        return self.granularity is not Granularity.TICK

    @property
    def start(self) -> int:
        if self.granularity is Granularity.DAY:
            return self.value.toordinal()
        if self.granularity is Granularity.YEAR:
            return _year_start(self.value)
        return self.value

    @property
    def end(self) -> int:
        """Exclusive end of the unit interval."""
        return self.span_end(1)

    def shifted(self, units: int) -> "TimePoint":
        """The time point ``units`` granules later.

        Raises:
            InvalidTime: the shifted point leaves the calendar.
        """
        if self.granularity is Granularity.DAY:
            try:
                return TimePoint(Granularity.DAY, self.value + dt.timedelta(days=units))
            except OverflowError:
                raise InvalidTime(f"{self} shifted by {units} days leaves the calendar") from None
        return TimePoint(self.granularity, self.value + units)

    def span_end(self, units: int) -> int:
        """Exclusive end of an activation lasting ``units`` granules."""
        if self.granularity is Granularity.YEAR:
            return _year_start(self.value + units)
        return self.start + units

    def comparable(self, other: "TimePoint") -> bool:
        return self.calendar == other.calendar

    def before(self, other: "TimePoint") -> bool:
        """Strictly earlier with no overlap (a year is not before its own days)."""
        if not self.comparable(other):
            raise InvalidTime(f"cannot compare {self} with {other}")
        return self.end <= other.start

    def contains(self, other: "TimePoint") -> bool:
        if not self.comparable(other):
            return False
        return self.start <= other.start and other.end <= self.end

    def sort_key(self) -> Tuple[int, int, int]:
        return (0 if self.calendar else 1, self.start, self.end)

    def __str__(self) -> str:
        if self.granularity is Granularity.DAY:
            return self.value.isoformat()
        if self.granularity is Granularity.YEAR:
            return f"{self.value:04d}"
        return str(self.value)

    def literal(self) -> str:
        """DSL spelling; 4-digit ticks need the ``tick`` keyword."""
        if self.granularity is Granularity.TICK and len(str(self.value)) == 4:
            return f"tick {self.value}"
        return str(self)


SENTINEL = TimePoint(Granularity.DAY, SENTINEL_DATE)


def check_event_time(t: TimePoint) -> None:
    """Reject the open-end sentinel (and the year holding it) as an event time."""
    if t == SENTINEL or (t.granularity is Granularity.YEAR and t.value >= 9999):
        raise InvalidTime(f"{t} is reserved as the open-end sentinel")


def same_instances(a: ThimacPath, b: ThimacPath) -> bool:
    """No shared leading segment selects two different instances."""
    for (sa, ia), (sb, ib) in zip(zip(a.segments, a.instances), zip(b.segments, b.instances)):
        if sa != sb:
            break
        if ia is not None and ib is not None and ia != ib:
            return False
    return True


def _induced_arcs(model: StaticModel, actions: Sequence[ActionRef]) -> Tuple[Arc, ...]:
    by_static: Dict[ActionRef, List[ActionRef]] = {}
    for ref in actions:
        by_static.setdefault(ref.static(), []).append(ref)
    arcs: List[Arc] = []
    for arc in model.arcs():
        for a in by_static.get(arc.source, ()):
            for b in by_static.get(arc.target, ()):
                if same_instances(a.thimac, b.thimac):
                    arcs.append(type(arc)(a, b))
    return tuple(arcs)


@dataclass(frozen=True, eq=False)
class Region:
    """Action nodes and arcs of a subdiagram; compares as sets."""

    actions: Tuple[ActionRef, ...]
    arcs: Tuple[Arc, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(dict.fromkeys(self.actions)))
        object.__setattr__(self, "arcs", tuple(dict.fromkeys(self.arcs)))

    @classmethod
    def induced(cls, model: StaticModel, actions: Iterable[ActionRef]) -> "Region":
        """Region with every model arc whose endpoints both lie in ``actions``."""
        actions = tuple(dict.fromkeys(actions))
        return cls(actions, _induced_arcs(model, actions))

    @property
    def action_set(self) -> FrozenSet[ActionRef]:
        return frozenset(self.actions)

    @property
    def arc_set(self) -> FrozenSet[Arc]:
        return frozenset(self.arcs)

    def creates(self) -> List[ActionRef]:
        return [a for a in self.actions if a.kind is ActionKind.CREATE]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Region):
            return NotImplemented
        return self.action_set == other.action_set and self.arc_set == other.arc_set

    def __hash__(self) -> int:
        return hash((self.action_set, self.arc_set))

    def __str__(self) -> str:
        return "{" + ", ".join(str(a) for a in self.actions) + "}"


@dataclass(frozen=True)
class EventDecl:
    id: str
    label: str
    region: Region
    time: TimePoint
    terminates: Optional[ThimacPath] = None
    bindings: Tuple[Tuple[ThimacPath, Literal], ...] = ()
    duration: int = 1

    def binding_map(self) -> Dict[ThimacPath, Literal]:
        return dict(self.bindings)


@dataclass(frozen=True)
class RepeatGroup:
    count: int
    ids: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        if self.count < 1:
            raise EventError(f"repeat count must be at least 1, got {self.count}")
        if not self.ids:
            raise EventError("repeat group lists no events")


ChronologyEntry = Union[str, RepeatGroup]


@dataclass(frozen=True)
class ChronologySpec:
    entries: Tuple[ChronologyEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def event_ids(self) -> List[str]:
        ids: List[str] = []
        for entry in self.entries:
            ids.extend(entry.ids if isinstance(entry, RepeatGroup) else (entry,))
        return ids


@dataclass(frozen=True)
class Occurrence:
    """The ``index``-th repetition of an event; ``group`` lists its repeat group."""

    event_id: str
    index: int = 1
    group: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.event_id}#{self.index}"


@dataclass(frozen=True)
class ScheduledOccurrence:
    occurrence: Occurrence
    event: EventDecl
    time: TimePoint
    start: int
    end: int

    @property
    def key(self) -> Tuple[str, int]:
        return (self.occurrence.event_id, self.occurrence.index)


@dataclass(frozen=True)
class FlowOrder:
    """Logical order of events derived from the static arcs."""

    ids: Tuple[str, ...]
    edges: FrozenSet[Tuple[str, str]]
    closure: FrozenSet[Tuple[str, str]]

    def precedes(self, a: str, b: str) -> bool:
        return (a, b) in self.closure


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


def check_region(model: StaticModel, region: Region, subject: str = "region") -> List[common.Diagnostic]:
    """Empty list iff ``region`` is a connected subdiagram of ``model``."""
    diagnostics: List[common.Diagnostic] = []
    if not region.actions:
        return [common.error("EmptyRegion", subject, "region has no actions")]
    known_arcs = set(model.arcs())
    members = region.action_set
    for ref in region.actions:
        if not model.resolves(ref.static()):
            diagnostics.append(
                common.error("SubdiagramViolation", subject, f"{ref} is not an action of the model")
            )
    for arc in region.arcs:
        if arc.static() not in known_arcs:
            diagnostics.append(
                common.error("SubdiagramViolation", subject, f"{arc} is not an arc of the model")
            )
        for end in (arc.source, arc.target):
            if end not in members:
                diagnostics.append(
                    common.error("SubdiagramViolation", subject, f"{arc} leaves the region at {end}")
                )
    if not diagnostics and not _connected(region):
        diagnostics.append(
            common.error("DisconnectedRegion", subject, "region actions are not weakly connected")
        )
    return diagnostics


def _connected(region: Region) -> bool:
    neighbours: Dict[ActionRef, Set[ActionRef]] = {a: set() for a in region.actions}
    for arc in region.arcs:
        neighbours[arc.source].add(arc.target)
        neighbours[arc.target].add(arc.source)
    first = region.actions[0]
    seen = {first}
    queue = [first]
    while queue:
        node = queue.pop()
        for nxt in neighbours[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(neighbours)


# ---------------------------------------------------------------------------
# Logical order
# ---------------------------------------------------------------------------


def _reaches(model: StaticModel, a: Region, b: Region) -> bool:
    """Some action only in ``a`` reaches one only in ``b`` along arcs interior to neither.

    Shared actions neither start nor end a path, so events over the same
    region are unordered.
    """
    a_static = {r.static() for r in a.actions}
    b_static = {r.static() for r in b.actions}
    targets = b_static - a_static
    succ: Dict[ActionRef, List[ActionRef]] = {}
    for arc in model.arcs():
        s, t = arc.source, arc.target
        if (s in a_static and t in a_static) or (s in b_static and t in b_static):
            continue
        succ.setdefault(s, []).append(t)
    queue = list(a_static - b_static)
    seen: Set[ActionRef] = set(queue)
    while queue:
        node = queue.pop()
        for nxt in succ.get(node, ()):
            if nxt in targets:
                return True
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def derive_flow_order(model: StaticModel, events: Sequence[EventDecl]) -> FlowOrder:
    """Partial order of events from reachability between their regions.

    Raises:
        CyclicOrder: two events reach each other.
    """
    ids = tuple(e.id for e in events)
    relation: Set[Tuple[str, str]] = set()
    for a in events:
        for b in events:
            if a.id != b.id and _reaches(model, a.region, b.region):
                relation.add((a.id, b.id))
    closure = set(relation)
    # Warshall over the (small) event set
    for k in ids:
        for i in ids:
            if (i, k) not in closure:
                continue
            for j in ids:
                if (k, j) in closure:
                    closure.add((i, j))
    cyclic = [i for i in ids if (i, i) in closure]
    if cyclic:
        raise CyclicOrder(cyclic)
    edges = {
        (a, b)
        for (a, b) in closure
        if not any((a, k) in closure and (k, b) in closure for k in ids)
    }
    log.debug("flow order over %d events: %d edges", len(ids), len(edges))
    return FlowOrder(ids, frozenset(edges), frozenset(closure))


# ---------------------------------------------------------------------------
# Chronologies
# ---------------------------------------------------------------------------


def expand(chronology: ChronologySpec) -> List[Occurrence]:
    """Unroll repeat groups in place, numbering repetitions from 1."""
    occurrences: List[Occurrence] = []
    for entry in chronology.entries:
        if isinstance(entry, RepeatGroup):
            for k in range(1, entry.count + 1):
                occurrences.extend(Occurrence(i, k, entry.ids) for i in entry.ids)
        else:
            occurrences.append(Occurrence(entry))
    return occurrences


def _group_span(group: Tuple[str, ...], events: Mapping[str, EventDecl]) -> int:
    """Length of one repetition of ``group`` in the group's granularity units."""
    decls = [events[i] for i in group]
    granularities = {d.time.granularity for d in decls}
    if len(granularities) != 1:
        raise MixedGranularityRepeat("repeat group mixes time granularities: " + ", ".join(group))
    if granularities.pop() is Granularity.YEAR:
        return max(d.time.value + d.duration for d in decls) - min(d.time.value for d in decls)
    return max(d.time.span_end(d.duration) for d in decls) - min(d.time.start for d in decls)


def schedule(events: Sequence[EventDecl], occurrences: Sequence[Occurrence]) -> List[ScheduledOccurrence]:
    """Attach times to expanded occurrences.

    Repetition k of a repeat group is shifted by (k-1) spans of the group.

    Raises:
        UnknownEvent, MixedGranularityRepeat, InvalidTime
    """
    by_id = {e.id: e for e in events}
    spans: Dict[Tuple[str, ...], int] = {}
    result: List[ScheduledOccurrence] = []
    for occ in occurrences:
        event = by_id.get(occ.event_id)
        if event is None:
            raise UnknownEvent(f"unknown event {occ.event_id}")
        shift = 0
        if occ.group and occ.index > 1:
            if occ.group not in spans:
                for i in occ.group:
                    if i not in by_id:
                        raise UnknownEvent(f"unknown event {i}")
                spans[occ.group] = _group_span(occ.group, by_id)
            shift = spans[occ.group] * (occ.index - 1)
        time = event.time.shifted(shift) if shift else event.time
        result.append(ScheduledOccurrence(occ, event, time, time.start, time.span_end(event.duration)))
    return result


def check_chronology(
    model: StaticModel,
    events: Sequence[EventDecl],
    chronology: ChronologySpec,
) -> List[common.Diagnostic]:
    """Identity, logical-order and time-monotonicity findings for a chronology."""
    diagnostics: List[common.Diagnostic] = []
    known = {e.id for e in events}
    unknown = [i for i in chronology.event_ids() if i not in known]
    for i in dict.fromkeys(unknown):
        diagnostics.append(common.error("UnknownEvent", i, "chronology names an undeclared event"))
    if unknown:
        return diagnostics

    occurrences = expand(chronology)
    try:
        scheduled = schedule(events, occurrences)
    except EventError as e:
        return diagnostics + [common.error(e.code, "chronology", e.message)]

    try:
        order: Optional[FlowOrder] = derive_flow_order(model, events)
    except CyclicOrder as e:
        diagnostics.append(common.error("CyclicOrder", ", ".join(e.cycle), e.message))
        order = None

    seen: Dict[Tuple[Region, TimePoint], ScheduledOccurrence] = {}
    for pos, occ in enumerate(scheduled):
        key = (occ.event.region, occ.time)
        prior = seen.get(key)
        if prior is not None:
            diagnostics.append(
                common.error(
                    "IdentityViolation",
                    str(occ.occurrence),
                    f"same region and time as {prior.occurrence} ({occ.time})",
                    order=pos,
                )
            )
        else:
            seen[key] = occ

    if order is not None:
        position: Dict[Tuple[str, int], int] = {}
        for pos, occ in enumerate(scheduled):
            position.setdefault(occ.key, pos)
        for pos, occ in enumerate(scheduled):
            b, k = occ.key
            for a in order.ids:
                if not order.precedes(a, b):
                    continue
                later = position.get((a, k))
                if later is not None and later > pos:
                    diagnostics.append(
                        common.error(
                            "OrderViolation",
                            str(occ.occurrence),
                            f"{a} must come before {b} but is placed after it",
                            order=pos,
                        )
                    )

    latest: Optional[ScheduledOccurrence] = None
    for pos, occ in enumerate(scheduled):
        if latest is not None and occ.time.comparable(latest.time) and occ.time.before(latest.time):
            diagnostics.append(
                common.warning(
                    "TimeMonotonicity",
                    str(occ.occurrence),
                    f"{occ.time} is earlier than {latest.occurrence} at {latest.time}",
                    order=pos,
                )
            )
        if latest is None or (occ.time.comparable(latest.time) and occ.start > latest.start):
            latest = occ
    return diagnostics


def check_events(model: StaticModel, events: Sequence[EventDecl]) -> List[common.Diagnostic]:
    """Region checks for every event, subject = event id."""
    diagnostics: List[common.Diagnostic] = []
    for pos, event in enumerate(events):
        for d in check_region(model, event.region, event.id):
            diagnostics.append(common.Diagnostic(d.code, d.severity, d.subject, d.message, order=pos))
    return diagnostics
