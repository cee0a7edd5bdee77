"""Text front end for thinging-machine models.

A ``.tm`` document declares thimacs, flow and trigger arcs, timed events
and an optional chronology::

    model "John Doe"

    thimac Person {
      create process release
    }
    flow Person.create -> Person.process

    event E1 "John is born" at 1975-04-03 {
      include Person.create
    }
    chronology E1

Parsing runs in two passes. The syntax pass turns tokens into raw
declarations and recovers at the next statement keyword after an error;
the resolution pass feeds the declarations through the model builders.
Every problem found by either pass is reported in one ``ParseError``.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Set, Tuple, Union

import common
from tmcore import (
    KEYWORDS,
    ActionKind,
    ActionRef,
    FlowArc,
    ModelError,
    StaticModel,
    ThimacPath,
    TriggerArc,
    add_flow,
    add_thimac,
    add_trigger,
)
from tmevents import (
    ChronologySpec,
    EventDecl,
    EventError,
    Region,
    RepeatGroup,
    TimePoint,
    check_event_time,
)

log = common.get_logger(__name__)

BUNDLED = ("johndoe.tm", "cheesehut.tm", "bad-transit.tm")

MAX_NESTING = 64
MAX_REPEAT = 10_000

_ACTION_WORDS = frozenset(k.value for k in ActionKind)
_TOP_LEVEL = frozenset({"model", "thimac", "flow", "trigger", "event", "chronology"})
_BLOCK_LEVEL = frozenset({"thimac", "attribute", "flow", "trigger"}) | _ACTION_WORDS
_EVENT_LEVEL = frozenset({"include", "set"})

_TOKEN_RE = re.compile(
    r"""
    (?P<NEWLINE>\n)
  | (?P<SPACE>[ \t\r\f\v]+)
  | (?P<COMMENT>\#[^\n]*)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*")
  | (?P<BADSTRING>"(?:[^"\\\n]|\\.)*)
  | (?P<DATE>\d{4}-\d{2}-\d{2}(?![0-9]))
  | (?P<ARROW>->)
  | (?P<INT>-?\d+)
  | (?P<IDENT>[A-Za-z][A-Za-z0-9_]*)
  | (?P<PUNCT>[{}\[\],.=])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class ParseError(common.TmError):
    """The document has errors; ``diagnostics`` lists all of them."""

    code = "ParseError"

    def __init__(self, diagnostics: List[common.Diagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0]
        more = f" (and {len(diagnostics) - 1} more)" if len(diagnostics) > 1 else ""
        super().__init__(f"{first.code} {first.subject}: {first.message}{more}", first.span)


SpanKey = Union[ThimacPath, FlowArc, TriggerArc, str]


@dataclass(frozen=True)
class ModelDocument:
    model: StaticModel = StaticModel()
    events: Tuple[EventDecl, ...] = ()
    chronology: Optional[ChronologySpec] = None
    spans: Mapping[SpanKey, common.SourceSpan] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def event(self, event_id: str) -> Optional[EventDecl]:
        return next((e for e in self.events if e.id == event_id), None)


# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: common.SourceSpan
    depth: int

    def is_word(self, *words: str) -> bool:
        return self.kind == "IDENT" and self.text in words

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.text)


def tokenize(text: str) -> Tuple[List[Token], List[common.Diagnostic]]:
    """Split ``text`` into tokens tagged with their brace depth.

    Characters outside the language are reported and skipped.
    """
    tokens: List[Token] = []
    diagnostics: List[common.Diagnostic] = []
    line, line_start, depth, pos = 1, 0, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = common.SourceSpan(line, pos - line_start + 1, 1)
            diagnostics.append(
                common.error("SyntaxError", "document", f"unexpected character {text[pos]!r}", span)
            )
            pos += 1
            continue
        kind = m.lastgroup
        value = m.group()
        span = common.SourceSpan(line, pos - line_start + 1, len(value))
        pos = m.end()
        if kind == "NEWLINE":
            line += 1
            line_start = pos
            continue
        if kind in ("SPACE", "COMMENT"):
            continue
        if kind == "BADSTRING":
            diagnostics.append(common.error("SyntaxError", "document", "unterminated string", span))
            continue
        if kind == "PUNCT":
            kind = value
        if kind == "}":
            depth = max(depth - 1, 0)
        tokens.append(Token(kind, value, span, depth))
        if kind == "{":
            depth += 1
    tokens.append(Token("EOF", "", common.SourceSpan(line, pos - line_start + 1), 0))
    return tokens, diagnostics


def _unquote(literal: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), literal[1:-1])


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


# ---------------------------------------------------------------------------
# Syntax pass
# ---------------------------------------------------------------------------


class _Syntax(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.message = message
        self.token = token


@dataclass(frozen=True)
class _RawRef:
    segments: Tuple[str, ...]
    instances: Tuple[Optional[int], ...]
    kind: Optional[str]
    span: common.SourceSpan

    def path(self) -> ThimacPath:
        return ThimacPath(self.segments, self.instances)

    def text(self) -> str:
        parts = [s if i is None else f"{s}[{i}]" for s, i in zip(self.segments, self.instances)]
        if self.kind:
            parts.append(self.kind)
        return ".".join(parts)


@dataclass
class _RawThimac:
    parent: Optional[Tuple[str, ...]]
    name: str
    span: common.SourceSpan
    attribute: bool = False
    actions: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class _RawArc:
    trigger: bool
    source: _RawRef
    target: _RawRef
    span: common.SourceSpan


@dataclass
class _RawEvent:
    id: str
    label: str
    time: str
    span: common.SourceSpan
    time_span: common.SourceSpan
    duration: int = 1
    terminates: Optional[_RawRef] = None
    includes: List[_RawRef] = field(default_factory=list)
    sets: List[Tuple[_RawRef, Any]] = field(default_factory=list)


@dataclass
class _RawChronology:
    # (id, span) or (count, [(id, span), ...], span)
    entries: List[tuple]
    span: common.SourceSpan


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: List[common.Diagnostic] = []
        self.name: Optional[str] = None
        self.thimacs: List[_RawThimac] = []
        self.arcs: List[_RawArc] = []
        self.events: List[_RawEvent] = []
        self.chronology: Optional[_RawChronology] = None

    # -- token helpers -------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise _Syntax(f"expected {what}, found {tok.describe()}", tok)
        return self.advance()

    def expect_word(self, word: str) -> Token:
        tok = self.peek()
        if not tok.is_word(word):
            raise _Syntax(f"expected '{word}', found {tok.describe()}", tok)
        return self.advance()

    def name_token(self, what: str) -> Token:
        return self.expect("IDENT", what)

    def fail(self, err: _Syntax) -> None:
        self.diagnostics.append(common.error("SyntaxError", "document", err.message, err.token.span))

    def recover(self, start: int, depth: int, keywords) -> None:
        """Skip to the next statement keyword at ``depth`` or the end of the block."""
        if self.pos == start:
            self.advance()
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or tok.depth < depth:
                return
            if tok.depth == depth and tok.kind == "IDENT" and tok.text in keywords:
                return
            self.advance()

    def statements(self, depth: int, keywords, handle) -> None:
        """Run ``handle`` on each statement until the block or input ends."""
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or (tok.kind == "}" and tok.depth < depth):
                return
            start = self.pos
            try:
                if tok.kind != "IDENT" or tok.text not in keywords:
                    raise _Syntax(f"unexpected {tok.describe()}", tok)
                handle(tok)
            except _Syntax as err:
                self.fail(err)
                self.recover(start, depth, keywords)

    def close_block(self) -> None:
        self.expect("}", "'}'")

    # -- grammar -------------------------------------------------------------

    def document(self) -> None:
        self.statements(0, _TOP_LEVEL, self.top_statement)

    def top_statement(self, tok: Token) -> None:
        if tok.text == "model":
            self.advance()
            name = self.expect("STRING", "model name string")
            if self.name is not None:
                raise _Syntax("model name declared twice", tok)
            self.name = _unquote(name.text)
        elif tok.text == "thimac":
            self.thimac(None, 0)
        elif tok.text in ("flow", "trigger"):
            self.arc(None)
        elif tok.text == "event":
            self.event()
        else:
            self.chronology_statement()

    def thimac(self, parent: Optional[Tuple[str, ...]], nesting: int) -> None:
        kw = self.expect_word("thimac")
        if nesting >= MAX_NESTING:
            raise _Syntax(f"thimacs nested deeper than {MAX_NESTING} levels", kw)
        name = self.name_token("thimac name")
        self.expect("{", "'{'")
        raw = _RawThimac(parent, name.text, name.span)
        self.thimacs.append(raw)
        path = (parent or ()) + (name.text,)
        inner = name.depth + 1

        def body(tok: Token) -> None:
            if tok.text in _ACTION_WORDS:
                raw.actions.append(self.advance().text)
            elif tok.text == "thimac":
                self.thimac(path, nesting + 1)
            elif tok.text == "attribute":
                self.attribute(path)
            else:
                self.arc(path)

        self.statements(inner, _BLOCK_LEVEL, body)
        self.close_block()

    def attribute(self, parent: Tuple[str, ...]) -> None:
        self.expect_word("attribute")
        name = self.name_token("attribute name")
        raw = _RawThimac(parent, name.text, name.span, attribute=True, actions=["create"])
        if self.peek().kind == "{":
            self.advance()
            while self.peek().kind == "IDENT" and self.peek().text in _ACTION_WORDS:
                raw.actions.append(self.advance().text)
            self.close_block()
        self.thimacs.append(raw)

    def segment(self) -> Tuple[Token, Optional[int]]:
        tok = self.expect("IDENT", "a name")
        index = None
        if self.peek().kind == "[":
            self.advance()
            num = self.expect("INT", "an instance number")
            if num.text.startswith("-"):
                raise _Syntax("instance numbers are non-negative", num)
            index = int(num.text)
            self.expect("]", "']'")
        return tok, index

    def path(self) -> _RawRef:
        first, index = self.segment()
        segments, instances = [first.text], [index]
        while self.peek().kind == ".":
            self.advance()
            tok, index = self.segment()
            segments.append(tok.text)
            instances.append(index)
        return _RawRef(tuple(segments), tuple(instances), None, first.span)

    def action_ref(self, scope: Optional[Tuple[str, ...]]) -> _RawRef:
        start = self.peek()
        raw = self.path()
        kind = raw.segments[-1]
        if kind not in _ACTION_WORDS or raw.instances[-1] is not None:
            raise _Syntax(f"{raw.text()} does not end in an action", start)
        segments, instances = raw.segments[:-1], raw.instances[:-1]
        if scope is not None:
            segments = scope + segments
            instances = (None,) * len(scope) + instances
        elif not segments:
            raise _Syntax(f"{kind} needs a thimac path", start)
        return _RawRef(segments, instances, kind, start.span)

    def arc(self, scope: Optional[Tuple[str, ...]]) -> None:
        kw = self.advance()
        source = self.action_ref(scope)
        self.expect("ARROW", "'->'")
        target = self.action_ref(scope)
        self.arcs.append(_RawArc(kw.text == "trigger", source, target, kw.span))

    def time(self) -> Tuple[str, common.SourceSpan]:
        tok = self.peek()
        if tok.kind in ("DATE", "INT"):
            self.advance()
            return tok.text, tok.span
        if tok.is_word("tick"):
            self.advance()
            num = self.expect("INT", "a tick number")
            return f"tick {num.text}", tok.span
        raise _Syntax(f"expected a time, found {tok.describe()}", tok)

    def literal(self) -> Any:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return int(tok.text)
        if tok.kind == "STRING":
            self.advance()
            return _unquote(tok.text)
        raise _Syntax(f"expected a number or string, found {tok.describe()}", tok)

    def event(self) -> None:
        self.expect_word("event")
        ident = self.name_token("event id")
        label = self.expect("STRING", "event label string")
        self.expect_word("at")
        time, time_span = self.time()
        raw = _RawEvent(ident.text, _unquote(label.text), time, ident.span, time_span)
        if self.peek().is_word("for"):
            self.advance()
            num = self.expect("INT", "a duration")
            raw.duration = int(num.text)
        if self.peek().is_word("terminates"):
            self.advance()
            raw.terminates = self.path()
        self.expect("{", "'{'")
        inner = ident.depth + 1

        def body(tok: Token) -> None:
            self.advance()
            if tok.text == "include":
                raw.includes.append(self.action_ref(None))
                while self.peek().kind == ",":
                    self.advance()
                    raw.includes.append(self.action_ref(None))
            else:
                target = self.path()
                self.expect("=", "'='")
                raw.sets.append((target, self.literal()))

        self.statements(inner, _EVENT_LEVEL, body)
        self.close_block()
        self.events.append(raw)

    def chronology_statement(self) -> None:
        kw = self.expect_word("chronology")
        entries: List[Any] = []
        while True:
            tok = self.peek()
            if tok.is_word("repeat"):
                self.advance()
                count = self.expect("INT", "a repeat count")
                self.expect("{", "'{'")
                ids = [self.chronology_id()]
                while self.peek().kind == ",":
                    self.advance()
                    ids.append(self.chronology_id())
                self.close_block()
                entries.append((int(count.text), ids, count.span))
            else:
                entries.append(self.chronology_id())
            if self.peek().kind != ",":
                break
            self.advance()
        if self.chronology is not None:
            raise _Syntax("chronology declared twice", kw)
        self.chronology = _RawChronology(entries, kw.span)

    def chronology_id(self) -> Tuple[str, common.SourceSpan]:
        tok = self.expect("IDENT", "an event id")
        if tok.text in KEYWORDS:
            raise _Syntax(f"expected an event id, found keyword {tok.text!r}", tok)
        return tok.text, tok.span


# ---------------------------------------------------------------------------
# Resolution pass
# ---------------------------------------------------------------------------


class _Resolver:
    def __init__(self, parser: _Parser):
        self.parser = parser
        self.diagnostics: List[common.Diagnostic] = []
        self.spans: Dict[SpanKey, common.SourceSpan] = {}
        self.model = StaticModel(name=parser.name or "")

    def report(self, code: str, subject: str, message: str, span: common.SourceSpan) -> None:
        self.diagnostics.append(common.error(code, subject, message, span))

    def thimacs(self) -> None:
        failed: Set[Tuple[str, ...]] = set()
        for raw in self.parser.thimacs:
            path = (raw.parent or ()) + (raw.name,)
            if raw.parent is not None and any(raw.parent[: i + 1] in failed for i in range(len(raw.parent))):
                failed.add(path)
                continue
            parent = ThimacPath(raw.parent) if raw.parent else None
            kinds = [ActionKind.parse(word) for word in raw.actions]
            try:
                self.model = add_thimac(self.model, parent, raw.name, kinds, raw.attribute)
            except ModelError as e:
                failed.add(path)
                self.report(e.code, ".".join(path), e.message, raw.span)
                continue
            self.spans[ThimacPath(path)] = raw.span

    def arcs(self) -> None:
        for raw in self.parser.arcs:
            subject = f"{raw.source.text()} -> {raw.target.text()}"
            try:
                source = ActionRef(raw.source.path(), ActionKind.parse(raw.source.kind))
                target = ActionRef(raw.target.path(), ActionKind.parse(raw.target.kind))
                if raw.trigger:
                    self.model = add_trigger(self.model, source, target)
                    self.spans[TriggerArc(source, target)] = raw.span
                else:
                    self.model = add_flow(self.model, source, target)
                    self.spans[FlowArc(source, target)] = raw.span
            except ModelError as e:
                self.report(e.code, subject, e.message, raw.source.span if e.code == "UnresolvedRef" else raw.span)

    def action(self, raw: _RawRef, subject: str) -> Optional[ActionRef]:
        try:
            ref = ActionRef(raw.path(), ActionKind.parse(raw.kind))
        except ModelError as e:
            self.report(e.code, subject, e.message, raw.span)
            return None
        if not self.model.resolves(ref.static()):
            self.report("UnresolvedRef", subject, f"{ref} is not a declared action", raw.span)
            return None
        return ref

    def event(self, raw: _RawEvent, seen: Set[str]) -> Optional[EventDecl]:
        ok = True
        if raw.id in KEYWORDS:
            self.report("InvalidIdentifier", raw.id, f"{raw.id!r} is a reserved word", raw.span)
            ok = False
        elif raw.id in seen:
            self.report("DuplicateName", raw.id, f"event {raw.id} is already declared", raw.span)
            ok = False
        seen.add(raw.id)

        time: Optional[TimePoint] = None
        try:
            time = TimePoint.parse(raw.time)
            check_event_time(time)
        except EventError as e:
            self.report(e.code, raw.id, e.message, raw.time_span)
            ok = False
        if raw.duration < 1:
            self.report("InvalidTime", raw.id, f"duration must be at least 1, got {raw.duration}", raw.time_span)
            ok = False

        actions: List[ActionRef] = []
        for inc in raw.includes:
            ref = self.action(inc, raw.id)
            if ref is None:
                ok = False
            else:
                actions.append(ref)

        terminates: Optional[ThimacPath] = None
        if raw.terminates is not None:
            terminates = raw.terminates.path()
            t = self.model.find(terminates)
            if t is None:
                self.report("UnresolvedRef", raw.id, f"terminates unknown thimac {terminates}", raw.terminates.span)
                ok = False
            elif not t.has(ActionKind.CREATE):
                self.report("UnresolvedRef", raw.id, f"terminates {terminates}, which never creates", raw.terminates.span)
                ok = False

        bindings: List[Tuple[ThimacPath, Any]] = []
        bound: Set[ThimacPath] = set()
        included = set(actions)
        for target, value in raw.sets:
            path = target.path()
            if not self.model.is_attribute(path):
                self.report("InvalidBinding", raw.id, f"{path} is not an attribute thimac", target.span)
                ok = False
            elif ActionRef(path, ActionKind.CREATE) not in included:
                self.report("InvalidBinding", raw.id, f"{path}.create is not in the event's region", target.span)
                ok = False
            elif path in bound:
                self.report("InvalidBinding", raw.id, f"{path} is set twice", target.span)
                ok = False
            else:
                bound.add(path)
                bindings.append((path, value))

        if not ok or time is None:
            return None
        self.spans[raw.id] = raw.span
        return EventDecl(
            id=raw.id,
            label=raw.label,
            region=Region.induced(self.model, actions),
            time=time,
            terminates=terminates,
            bindings=tuple(bindings),
            duration=raw.duration,
        )

    def chronology(self, declared: Set[str]) -> Optional[ChronologySpec]:
        raw = self.parser.chronology
        if raw is None:
            return None
        entries: List[Any] = []
        ok = True

        def known(item: Tuple[str, common.SourceSpan]) -> bool:
            name, span = item
            if name not in declared:
                self.report("UnresolvedRef", name, "chronology names an undeclared event", span)
                return False
            return True

        for entry in raw.entries:
            if len(entry) == 2:
                ok = known(entry) and ok
                entries.append(entry[0])
                continue
            count, ids, span = entry
            if not 1 <= count <= MAX_REPEAT:
                self.report("InvalidRepeat", "chronology", f"repeat count must be 1..{MAX_REPEAT}, got {count}", span)
                ok = False
            for item in ids:
                ok = known(item) and ok
            if ok:
                entries.append(RepeatGroup(count, tuple(name for name, _ in ids)))
        self.spans["chronology"] = raw.span
        return ChronologySpec(tuple(entries)) if ok else None

    def document(self) -> ModelDocument:
        self.thimacs()
        self.arcs()
        events: List[EventDecl] = []
        seen: Set[str] = set()
        for raw in self.parser.events:
            decl = self.event(raw, seen)
            if decl is not None:
                events.append(decl)
        chronology = self.chronology(seen)
        return ModelDocument(self.model, tuple(events), chronology, self.spans)


def parse(text: str) -> ModelDocument:
    """Parse a ``.tm`` document.

    Raises:
        ParseError: with every syntax and resolution error found.
    """
    text = text.replace("\r\n", "\n")
    tokens, lex_errors = tokenize(text)
    parser = _Parser(tokens)
    parser.document()
    resolver = _Resolver(parser)
    doc = resolver.document()
    diagnostics = lex_errors + parser.diagnostics + resolver.diagnostics
    if diagnostics:
        diagnostics.sort(key=lambda d: (d.span.line, d.span.column) if d.span else (0, 0))
        log.debug("parse failed with %d diagnostics", len(diagnostics))
        raise ParseError(diagnostics)
    log.debug(
        "parsed %d thimacs, %d arcs, %d events",
        sum(1 for _ in doc.model.iter_thimacs()),
        len(doc.model.arcs()),
        len(doc.events),
    )
    return doc


def parse_file(path) -> ModelDocument:
    return parse(common.load_source(path))


def bundled_path(name: str) -> Path:
    """Location of a fixture shipped with this package."""
    return common.data_path(name)


def load_bundled(name: str) -> ModelDocument:
    return parse_file(bundled_path(name))


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------


def _literal(value: Any) -> str:
    if isinstance(value, str):
        return quote(value)
    return str(value)


def _thimac_lines(thimac, indent: str) -> Iterator[str]:
    if thimac.attribute:
        extra = [k.value for k in thimac.actions if k is not ActionKind.CREATE]
        if extra:
            yield f"{indent}attribute {thimac.name} {{ {' '.join(extra)} }}"
        else:
            yield f"{indent}attribute {thimac.name}"
        return
    if not thimac.actions and not thimac.subthimacs:
        yield f"{indent}thimac {thimac.name} {{}}"
        return
    yield f"{indent}thimac {thimac.name} {{"
    inner = indent + "  "
    if thimac.actions:
        yield inner + " ".join(k.value for k in thimac.actions)
    for sub in thimac.subthimacs:
        yield from _thimac_lines(sub, inner)
    yield f"{indent}}}"


def _event_lines(event: EventDecl) -> Iterator[str]:
    head = f"event {event.id} {quote(event.label)} at {event.time.literal()}"
    if event.duration != 1:
        head += f" for {event.duration}"
    if event.terminates is not None:
        head += f" terminates {event.terminates}"
    if not event.region.actions and not event.bindings:
        yield head + " {}"
        return
    yield head + " {"
    if event.region.actions:
        yield "  include " + ", ".join(str(a) for a in event.region.actions)
    for path, value in event.bindings:
        yield f"  set {path} = {_literal(value)}"
    yield "}"


def _chronology_line(chronology: ChronologySpec) -> str:
    parts = []
    for entry in chronology.entries:
        if isinstance(entry, RepeatGroup):
            parts.append(f"repeat {entry.count} {{ {', '.join(entry.ids)} }}")
        else:
            parts.append(entry)
    return "chronology " + ", ".join(parts)


def print_document(doc: ModelDocument) -> str:
    """Canonical text for ``doc``.

    Thimacs come first as nested blocks, then every arc at top level in
    declaration order, then events and the chronology.
    """
    sections: List[List[str]] = []
    if doc.model.name:
        sections.append([f"model {quote(doc.model.name)}"])
    thimacs = [line for root in doc.model.roots for line in _thimac_lines(root, "")]
    if thimacs:
        sections.append(thimacs)
    arcs = [f"flow {a.source} -> {a.target}" for a in doc.model.flows]
    arcs += [f"trigger {a.source} -> {a.target}" for a in doc.model.triggers]
    if arcs:
        sections.append(arcs)
    events = [line for e in doc.events for line in _event_lines(e)]
    if events:
        sections.append(events)
    if doc.chronology is not None and doc.chronology.entries:
        sections.append([_chronology_line(doc.chronology)])
    return "".join("\n".join(section) + "\n" + ("\n" if i < len(sections) - 1 else "")
                   for i, section in enumerate(sections))
