"""Renderers for simulation results and models.

Tables come in two serialisations: TSV (exact cell text, the golden
format) and aligned plain text for reading. Diagrams are Graphviz DOT.
"""

import fnmatch
import re
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import common
from tmcore import Arc, Thimac, ThimacPath, TriggerArc
from tmdsl import ModelDocument
from tmevents import SENTINEL, SENTINEL_DATE, CyclicOrder, Granularity, TimePoint, derive_flow_order
from tmsim import Exicon, ExistenceLedger, Trace

log = common.get_logger(__name__)

VIEWS = ("static", "events")

EVENT_LOG_HEADER = ("Date", "description")
HISTORY_BASE_HEADER = ("Row", "id", "startTime", "endTime")
NOTHING = "Nothing"


class EmitError(common.TmError):
    code = "EmitError"


class MissingAttribute(EmitError):
    code = "MissingAttribute"


class UnknownView(EmitError):
    code = "UnknownView"


# ---------------------------------------------------------------------------
# Event log
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventLogRow:
    time: TimePoint
    description: str


def emit_event_log(trace: Trace) -> List[EventLogRow]:
    """One row per occurrence, by time; ties keep chronology order."""
    rows = [EventLogRow(entry.time, entry.event.label) for entry in trace.entries]
    return sorted(rows, key=lambda r: r.time.sort_key())


def fill_nothing_days(rows: Sequence[EventLogRow]) -> List[EventLogRow]:
    """Insert a ``Nothing`` row for every quiet day between two day rows."""
    filled: List[EventLogRow] = []
    for prev, row in zip([None] + list(rows[:-1]), rows):
        if (
            prev is not None
            and prev.time.granularity is Granularity.DAY
            and row.time.granularity is Granularity.DAY
        ):
            for gap in range(1, row.time.start - prev.time.start):
                filled.append(EventLogRow(prev.time.shifted(gap), NOTHING))
        filled.append(row)
    return filled


def event_log_table(rows: Iterable[EventLogRow]) -> Tuple[Tuple[str, ...], List[List[str]]]:
    return EVENT_LOG_HEADER, [[str(r.time), r.description] for r in rows]


# ---------------------------------------------------------------------------
# History table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistoryRow:
    row: int
    id: Any
    start: TimePoint
    end: Optional[TimePoint]
    attributes: Tuple[Tuple[str, Any], ...] = ()

    def valid_at(self, t: TimePoint) -> bool:
        if not self.start.comparable(t) or t.start < self.start.start:
            return False
        if self.end is None:
            return not t.calendar or t.start < SENTINEL.start
        return t.start < self.end.start


def _matches(path: ThimacPath, pattern: str) -> bool:
    if pattern in (str(path), str(path.static())):
        return True
    return any(c in pattern for c in "*?") and fnmatch.fnmatchcase(str(path.static()), pattern)


def _value_at(exicons: Sequence[Exicon], point: int) -> Any:
    for e in exicons:
        if e.becoming.start <= point and (e.end is None or point < e.end.start):
            return e.value
    return None


def _id_key(value: Any) -> Tuple[int, Any]:
    return (0, value) if isinstance(value, int) else (1, str(value))


def emit_history_table(ledger: ExistenceLedger, group: str) -> List[HistoryRow]:
    """Rows over which all attributes of an entity matching ``group`` are constant.

    Attribute columns are the value-bearing children of the entities in
    first-appearance order; the child named ``id`` supplies the row id.

    Raises:
        MissingAttribute: an entity has no value for some column while it exists.
    """
    paths = ledger.paths()
    entities = [p for p in paths if _matches(p, group)]
    by_path: Dict[ThimacPath, List[Exicon]] = {p: ledger.for_thimac(p) for p in paths}
    columns: List[str] = []
    for entity in entities:
        for p in paths:
            if p.parent != entity or p.name.lower() == "id" or p.name in columns:
                continue
            if any(e.value is not None for e in by_path[p]):
                columns.append(p.name)

    raw: List[Tuple[Any, TimePoint, Optional[TimePoint], Tuple[Any, ...]]] = []
    for entity in entities:
        id_path = next((p for p in paths if p.parent == entity and p.name.lower() == "id"), None)
        if id_path is None:
            raise MissingAttribute(f"{entity} has no id attribute")
        watched = [id_path] + [entity.child(c) for c in columns]
        for existence in by_path[entity]:
            stop = existence.end.start if existence.end is not None else None
            points: Dict[int, TimePoint] = {existence.becoming.start: existence.becoming}
            for p in watched:
                for e in by_path.get(p, ()):
                    for t in (e.becoming, e.end):
                        if t is not None and existence.becoming.start < t.start and (stop is None or t.start < stop):
                            points.setdefault(t.start, t)
            starts = sorted(points)
            segments = []
            for i, point in enumerate(starts):
                values = []
                for p in watched:
                    value = _value_at(by_path.get(p, ()), point)
                    if value is None:
                        raise MissingAttribute(f"{p} has no value at {points[point]}")
                    values.append(value)
                end = points[starts[i + 1]] if i + 1 < len(starts) else existence.end
                if segments and segments[-1][3] == tuple(values):
                    segments[-1] = segments[-1][:2] + (end, segments[-1][3])
                else:
                    segments.append((values[0], points[point], end, tuple(values)))
            raw.extend(segments)

    raw.sort(key=lambda r: (_id_key(r[0]), r[1].sort_key()))
    return [
        HistoryRow(n, ident, start, end, tuple(zip(columns, values[1:])))
        for n, (ident, start, end, values) in enumerate(raw, start=1)
    ]


def history_table(rows: Sequence[HistoryRow]) -> Tuple[Tuple[str, ...], List[List[str]]]:
    names = tuple(name.lower() for name, _ in rows[0].attributes) if rows else ()
    cells = [
        [
            str(r.row),
            str(r.id),
            str(r.start),
            str(r.end) if r.end is not None else SENTINEL_DATE.isoformat(),
            *(str(v) for _, v in r.attributes),
        ]
        for r in rows
    ]
    return HISTORY_BASE_HEADER + names, cells


def snapshot(rows: Sequence[HistoryRow], t: TimePoint) -> List[HistoryRow]:
    """History rows valid at ``t``, renumbered from 1."""
    return [replace(r, row=n) for n, r in enumerate((r for r in rows if r.valid_at(t)), start=1)]


def snapshot_table(rows: Sequence[HistoryRow]) -> Tuple[Tuple[str, ...], List[List[str]]]:
    names = tuple(name.lower() for name, _ in rows[0].attributes) if rows else ()
    cells = [[str(r.row), str(r.id), *(str(v) for _, v in r.attributes)] for r in rows]
    return ("Row", "id") + names, cells


# ---------------------------------------------------------------------------
# Table serialisation
# ---------------------------------------------------------------------------


def _clean(cell: str) -> str:
    return cell.replace("\t", " ").replace("\n", " ")


def render_tsv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["\t".join(header)] + ["\t".join(_clean(c) for c in row) for row in rows]
    return "".join(line + "\n" for line in lines)


def render_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    table = [list(header)] + [[_clean(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in table if i < len(r)) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table]
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# DOT
# ---------------------------------------------------------------------------


def dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def node_id(ref, prefix: str = "") -> str:
    return dot_quote(f"{prefix}{ref.thimac}__{ref.kind.value}")


def _edge(arc: Arc, prefix: str = "", extra: str = "") -> str:
    attrs = []
    if isinstance(arc, TriggerArc):
        attrs.append("style=dashed")
    if extra:
        attrs.append(extra)
    suffix = f" [{', '.join(attrs)}]" if attrs else ""
    return f"{node_id(arc.source, prefix)} -> {node_id(arc.target, prefix)}{suffix};"


def _cluster(path: ThimacPath, thimac: Thimac, indent: str) -> List[str]:
    lines = [f"{indent}subgraph {dot_quote('cluster_' + str(path))} {{"]
    inner = indent + "  "
    label = thimac.name + (" (attribute)" if thimac.attribute else "")
    lines.append(f"{inner}label={dot_quote(label)};")
    for kind in thimac.actions:
        lines.append(f"{inner}{dot_quote(f'{path}__{kind.value}')} [label={dot_quote(kind.title)}];")
    for sub in thimac.subthimacs:
        lines.extend(_cluster(path.child(sub.name), sub, inner))
    lines.append(f"{indent}}}")
    return lines


def _static_body(doc: ModelDocument) -> List[str]:
    lines: List[str] = []
    for root in doc.model.roots:
        lines.extend(_cluster(ThimacPath.of(root.name), root, "  "))
    lines.extend("  " + _edge(arc) for arc in doc.model.arcs())
    return lines


def _events_body(doc: ModelDocument) -> List[str]:
    lines: List[str] = []
    anchors: Dict[str, Tuple[str, str]] = {}
    for k, event in enumerate(doc.events, start=1):
        prefix = f"E{k}/"
        cluster = f"cluster_E{k}"
        lines.append(f"  subgraph {dot_quote(cluster)} {{")
        lines.append(f"    label={dot_quote(f'E{k}: {event.id}' + chr(10) + event.label)};")
        lines.append(f"    tooltip={dot_quote(str(event.time))};")
        for ref in event.region.actions:
            lines.append(f"    {node_id(ref, prefix)} [label={dot_quote(f'{ref.thimac} {ref.kind.title}')}];")
        lines.extend("    " + _edge(arc, prefix) for arc in event.region.arcs)
        lines.append("  }")
        if event.region.actions:
            anchors[event.id] = (node_id(event.region.actions[0], prefix), cluster)
    try:
        order = derive_flow_order(doc.model, doc.events)
    except CyclicOrder as e:
        log.warning("events view drawn without order edges: %s", e.message)
        return lines
    position = {e.id: i for i, e in enumerate(doc.events)}
    for a, b in sorted(order.edges, key=lambda ab: (position[ab[0]], position[ab[1]])):
        if a in anchors and b in anchors:
            (na, ca), (nb, cb) = anchors[a], anchors[b]
            lines.append(
                f"  {na} -> {nb} [style=bold, ltail={dot_quote(ca)}, lhead={dot_quote(cb)}];"
            )
    return lines


def emit_dot(doc: ModelDocument, view: str = "static") -> str:
    """DOT digraph for ``doc``.

    ``static`` draws thimacs as nested clusters with solid flows and dashed
    triggers. ``events`` draws the same static diagram plus one ``E<k>``
    cluster per event region, with bold edges for the order the static arcs
    impose on events.

    Raises:
        UnknownView
    """
    if view not in VIEWS:
        raise UnknownView(f"unknown view {view!r}; expected one of {', '.join(VIEWS)}")
    header = [
        f"digraph {dot_quote(doc.model.name or 'tm')} {{",
        "  compound=true;",
        "  node [shape=box];",
    ]
    body = _static_body(doc)
    if view == "events":
        body += _events_body(doc)
    return "\n".join(header + body + ["}"]) + "\n"


# Minimal DOT grammar check: graph, subgraphs, node/edge/attr statements.

_DOT_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/|\#[^\n]*)
  | (?P<id>"(?:[^"\\]|\\.)*"|-?(?:\.\d+|\d+(?:\.\d*)?)|[A-Za-z_\x80-\uffff][A-Za-z_0-9\x80-\uffff]*)
  | (?P<edgeop>->|--)
  | (?P<punct>[{}\[\];,=:])
    """,
    re.VERBOSE | re.DOTALL,
)

_DOT_KEYWORDS = {"strict", "graph", "digraph", "subgraph", "node", "edge"}


class _DotChecker:
    def __init__(self, text: str):
        self.tokens: List[Tuple[str, str]] = []
        self.errors: List[str] = []
        pos = 0
        while pos < len(text):
            m = _DOT_TOKEN.match(text, pos)
            if m is None:
                self.errors.append(f"unexpected character {text[pos]!r} at offset {pos}")
                return
            pos = m.end()
            if m.lastgroup == "ws":
                continue
            value = m.group()
            kind = m.lastgroup
            if kind == "id" and value.lower() in _DOT_KEYWORDS:
                kind = value.lower()
            elif kind in ("punct", "edgeop"):
                kind = value
            self.tokens.append((kind, value))
        self.tokens.append(("eof", ""))
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def take(self, kind: str) -> None:
        if self.peek() != kind:
            raise ValueError(f"expected {kind}, found {self.tokens[self.pos][1] or 'end of input'}")
        self.pos += 1

    def graph(self) -> None:
        if self.peek() == "strict":
            self.take("strict")
        if self.peek() not in ("graph", "digraph"):
            raise ValueError("expected graph or digraph")
        self.pos += 1
        if self.peek() == "id":
            self.take("id")
        self.block()
        self.take("eof")

    def block(self) -> None:
        self.take("{")
        while self.peek() not in ("}", "eof"):
            self.statement()
            if self.peek() == ";":
                self.take(";")
        self.take("}")

    def attr_list(self) -> None:
        while self.peek() == "[":
            self.take("[")
            while self.peek() == "id":
                self.take("id")
                self.take("=")
                self.take("id")
                if self.peek() in (";", ","):
                    self.pos += 1
            self.take("]")

    def operand(self) -> None:
        if self.peek() in ("subgraph", "{"):
            self.subgraph()
        else:
            self.take("id")
            if self.peek() == ":":
                self.take(":")
                self.take("id")

    def subgraph(self) -> None:
        if self.peek() == "subgraph":
            self.take("subgraph")
            if self.peek() == "id":
                self.take("id")
        self.block()

    def statement(self) -> None:
        kind = self.peek()
        if kind in ("graph", "node", "edge"):
            self.pos += 1
            self.attr_list()
            return
        if kind == "id" and self.tokens[self.pos + 1][0] == "=":
            self.take("id")
            self.take("=")
            self.take("id")
            return
        self.operand()
        while self.peek() in ("->", "--"):
            self.pos += 1
            self.operand()
        self.attr_list()


def dot_syntax_errors(text: str) -> List[str]:
    """Empty when ``text`` is a syntactically valid DOT graph."""
    checker = _DotChecker(text)
    if checker.errors:
        return checker.errors
    try:
        checker.graph()
    except ValueError as e:
        return [str(e)]
    return []
