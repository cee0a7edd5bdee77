"""Thinging-machine static models.

A static model is the atemporal diagram: a tree of thimacs, each declaring
some of the five generic actions, connected by flow arcs (solid) and
trigger arcs (dashed). Models are immutable; the ``add_*`` builders return
new models.
"""

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union

import common

log = common.get_logger(__name__)

IDENTIFIER = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Words the DSL reserves; they can never name a thimac or an event.
KEYWORDS = frozenset(
    {
        "model",
        "thimac",
        "attribute",
        "flow",
        "trigger",
        "event",
        "at",
        "for",
        "terminates",
        "include",
        "set",
        "chronology",
        "repeat",
        "tick",
        "create",
        "process",
        "release",
        "transfer",
        "receive",
    }
)


class ModelError(common.TmError):
    code = "ModelError"


class UnknownParent(ModelError):
    code = "UnknownParent"


class DuplicateName(ModelError):
    code = "DuplicateName"


class AttributeRuleViolation(ModelError):
    code = "AttributeRuleViolation"


class InvalidIdentifier(ModelError):
    code = "InvalidIdentifier"


class UnresolvedRef(ModelError):
    code = "UnresolvedRef"


class DuplicateArc(ModelError):
    code = "DuplicateArc"


class SelfLoop(ModelError):
    code = "SelfLoop"


class TriggerTargetNotCreate(ModelError):
    code = "TriggerTargetNotCreate"


class TriggerWithinThimac(ModelError):
    code = "TriggerWithinThimac"


class UnknownArc(ModelError):
    code = "UnknownArc"


class ActionKind(Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    @property
    def rank(self) -> int:
        return _KIND_RANK[self]

    @property
    def title(self) -> str:
        return self.value.capitalize()

    @classmethod
    def parse(cls, word: str) -> "ActionKind":
        try:
            return cls(word.lower())
        except ValueError:
            raise ValueError(f"unknown action kind: {word!r}") from None


_KIND_RANK = {kind: i for i, kind in enumerate(ActionKind)}


def canonical_actions(actions: Iterable[ActionKind]) -> Tuple[ActionKind, ...]:
    """One node per kind, in create/process/release/transfer/receive order."""
    return tuple(sorted(set(actions), key=lambda k: k.rank))


@dataclass(frozen=True)
class ThimacPath:
    """Root thimac name followed by nested subthimac names.

    ``instances`` optionally selects an instance per segment (``Row[3]``).
    Static models only use plain paths; instance selectors appear in
    events, where each instance is a separate existence of one region.
    """

    segments: Tuple[str, ...]
    instances: Tuple[Optional[int], ...] = ()

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise InvalidIdentifier("a thimac path needs at least one segment")
        for segment in segments:
            if not isinstance(segment, str) or not IDENTIFIER.match(segment):
                raise InvalidIdentifier(f"not an identifier: {segment!r}")
        instances = tuple(self.instances) or (None,) * len(segments)
        if len(instances) != len(segments):
            raise InvalidIdentifier("instance selectors do not match the path segments")
        for index in instances:
            if index is not None and (not isinstance(index, int) or index < 0):
                raise InvalidIdentifier(f"instance selector must be a non-negative integer: {index!r}")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "instances", instances)

    @classmethod
    def of(cls, *segments: str) -> "ThimacPath":
        return cls(tuple(segments))

    @classmethod
    def parse(cls, text: str) -> "ThimacPath":
        """Parse ``Table.Row[3].Price`` style text."""
        segments: List[str] = []
        instances: List[Optional[int]] = []
        for part in text.split("."):
            m = re.fullmatch(r"([A-Za-z][A-Za-z0-9_]*)(?:\[(\d+)\])?", part)
            if not m:
                raise InvalidIdentifier(f"not a thimac path: {text!r}")
            segments.append(m.group(1))
            instances.append(int(m.group(2)) if m.group(2) is not None else None)
        return cls(tuple(segments), tuple(instances))

    @property
    def name(self) -> str:
        return self.segments[-1]

    @property
    def depth(self) -> int:
        return len(self.segments)

    @property
    def parent(self) -> Optional["ThimacPath"]:
        if len(self.segments) == 1:
            return None
        return ThimacPath(self.segments[:-1], self.instances[:-1])

    @property
    def is_static(self) -> bool:
        return all(i is None for i in self.instances)

    def child(self, name: str, instance: Optional[int] = None) -> "ThimacPath":
        return ThimacPath(self.segments + (name,), self.instances + (instance,))

    def static(self) -> "ThimacPath":
        if self.is_static:
            return self
        return ThimacPath(self.segments)

    def is_within(self, other: "ThimacPath") -> bool:
        """True when ``other`` is this path or one of its ancestors."""
        n = len(other.segments)
        return (
            len(self.segments) >= n
            and self.segments[:n] == other.segments
            and self.instances[:n] == other.instances
        )

    def __str__(self) -> str:
        return ".".join(
            s if i is None else f"{s}[{i}]" for s, i in zip(self.segments, self.instances)
        )

    def __repr__(self) -> str:
        return f"ThimacPath({str(self)!r})"

    def __lt__(self, other: "ThimacPath") -> bool:
        return self._key() < other._key()

    def _key(self):
        return tuple(zip(self.segments, (-1 if i is None else i for i in self.instances)))


@dataclass(frozen=True)
class ActionRef:
    thimac: ThimacPath
    kind: ActionKind

    @classmethod
    def parse(cls, text: str) -> "ActionRef":
        head, _, kind = text.rpartition(".")
        if not head:
            raise InvalidIdentifier(f"not an action reference: {text!r}")
        return cls(ThimacPath.parse(head), ActionKind.parse(kind))

    def static(self) -> "ActionRef":
        if self.thimac.is_static:
            return self
        return ActionRef(self.thimac.static(), self.kind)

    def __str__(self) -> str:
        return f"{self.thimac}.{self.kind.value}"


@dataclass(frozen=True)
class FlowArc:
    source: ActionRef
    target: ActionRef

    arrow = "->"

    def static(self) -> "FlowArc":
        return FlowArc(self.source.static(), self.target.static())

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


@dataclass(frozen=True)
class TriggerArc:
    source: ActionRef
    target: ActionRef

    arrow = "=>"

    def static(self) -> "TriggerArc":
        return TriggerArc(self.source.static(), self.target.static())

    def __str__(self) -> str:
        return f"{self.source} => {self.target}"


Arc = Union[FlowArc, TriggerArc]


class FlowKind(Enum):
    SELF = "self"
    INTERNAL = "internal"
    TRANSIT = "transit"


@dataclass(frozen=True)
class Thimac:
    name: str
    subthimacs: Tuple["Thimac", ...] = ()
    actions: Tuple[ActionKind, ...] = ()
    attribute: bool = False

    def __post_init__(self):
        object.__setattr__(self, "subthimacs", tuple(self.subthimacs))
        object.__setattr__(self, "actions", canonical_actions(self.actions))

    def has(self, kind: ActionKind) -> bool:
        return kind in self.actions

    def sub(self, name: str) -> Optional["Thimac"]:
        for t in self.subthimacs:
            if t.name == name:
                return t
        return None


@dataclass(frozen=True)
class StaticModel:
    name: str = ""
    roots: Tuple[Thimac, ...] = ()
    flows: Tuple[FlowArc, ...] = ()
    triggers: Tuple[TriggerArc, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        object.__setattr__(self, "flows", tuple(self.flows))
        object.__setattr__(self, "triggers", tuple(self.triggers))

    def find(self, path: ThimacPath) -> Optional[Thimac]:
        """Thimac at ``path`` (instance selectors ignored) or None."""
        level = self.roots
        found: Optional[Thimac] = None
        for segment in path.segments:
            found = next((t for t in level if t.name == segment), None)
            if found is None:
                return None
            level = found.subthimacs
        return found

    def iter_thimacs(self) -> Iterator[Tuple[ThimacPath, Thimac]]:
        """Pre-order walk in declaration order."""

        def walk(prefix: Tuple[str, ...], thimacs: Tuple[Thimac, ...]):
            for t in thimacs:
                path = ThimacPath(prefix + (t.name,))
                yield path, t
                yield from walk(path.segments, t.subthimacs)

        yield from walk((), self.roots)

    def actions(self) -> List[ActionRef]:
        """Every declared action node in declaration order."""
        return [ActionRef(path, kind) for path, t in self.iter_thimacs() for kind in t.actions]

    def resolves(self, ref: ActionRef) -> bool:
        t = self.find(ref.thimac)
        return t is not None and t.has(ref.kind)

    def is_attribute(self, path: ThimacPath) -> bool:
        t = self.find(path)
        return t is not None and t.attribute

    def arcs(self) -> List[Arc]:
        return list(self.flows) + list(self.triggers)

    def action_order(self) -> Dict[ActionRef, int]:
        return {ref: i for i, ref in enumerate(self.actions())}

    def arc_order(self) -> Dict[Arc, int]:
        return {arc: i for i, arc in enumerate(self.arcs())}


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not IDENTIFIER.match(name):
        raise InvalidIdentifier(f"not an identifier: {name!r}")
    if name in KEYWORDS:
        raise InvalidIdentifier(f"{name!r} is a reserved word")


def _insert(thimacs: Tuple[Thimac, ...], segments: Tuple[str, ...], new: Thimac) -> Tuple[Thimac, ...]:
    if not segments:
        return thimacs + (new,)
    head, rest = segments[0], segments[1:]
    return tuple(
        replace(t, subthimacs=_insert(t.subthimacs, rest, new)) if t.name == head else t
        for t in thimacs
    )


def add_thimac(
    model: StaticModel,
    parent: Optional[ThimacPath],
    name: str,
    actions: Iterable[ActionKind] = (),
    attribute: bool = False,
) -> StaticModel:
    """Return ``model`` with a new thimac under ``parent`` (a root when None).

    Raises:
        UnknownParent, DuplicateName, AttributeRuleViolation, InvalidIdentifier
    """
    _check_name(name)
    actions = canonical_actions(actions)
    if attribute and ActionKind.CREATE not in actions:
        raise AttributeRuleViolation(f"attribute {name} must declare create")
    if parent is None:
        siblings = model.roots
        where = "at root"
    else:
        if not parent.is_static:
            raise InvalidIdentifier(f"static paths cannot select instances: {parent}")
        host = model.find(parent)
        if host is None:
            raise UnknownParent(f"no thimac {parent}")
        if host.attribute:
            raise AttributeRuleViolation(f"attribute {parent} cannot contain subthimacs")
        siblings = host.subthimacs
        where = f"in {parent}"
    if any(t.name == name for t in siblings):
        raise DuplicateName(f"{name} is already declared {where}")
    new = Thimac(name=name, actions=actions, attribute=attribute)
    prefix = parent.segments if parent is not None else ()
    log.debug("add thimac %s", ".".join(prefix + (name,)))
    return replace(model, roots=_insert(model.roots, prefix, new))


def _resolve(model: StaticModel, ref: ActionRef) -> None:
    if not ref.thimac.is_static:
        raise InvalidIdentifier(f"static arcs cannot select instances: {ref}")
    if not model.resolves(ref):
        raise UnresolvedRef(f"{ref} is not a declared action")


def add_flow(model: StaticModel, source: ActionRef, target: ActionRef) -> StaticModel:
    """Append a flow arc.

    Adjacency legality is left to the validator so that illegal models can
    still be built.

    Raises:
        UnresolvedRef, DuplicateArc, SelfLoop
    """
    _resolve(model, source)
    _resolve(model, target)
    if source == target:
        raise SelfLoop(f"flow from {source} to itself")
    arc = FlowArc(source, target)
    if arc in model.flows:
        raise DuplicateArc(f"flow {arc} already declared")
    return replace(model, flows=model.flows + (arc,))


def add_trigger(model: StaticModel, source: ActionRef, target: ActionRef) -> StaticModel:
    """Append a trigger arc; triggers always realise a Create in another thimac.

    Raises:
        UnresolvedRef, TriggerTargetNotCreate, TriggerWithinThimac, DuplicateArc
    """
    _resolve(model, source)
    _resolve(model, target)
    if target.kind is not ActionKind.CREATE:
        raise TriggerTargetNotCreate(f"trigger target {target} is not a create")
    if source.thimac == target.thimac:
        raise TriggerWithinThimac(f"trigger {source} => {target} stays inside {source.thimac}")
    arc = TriggerArc(source, target)
    if arc in model.triggers:
        raise DuplicateArc(f"trigger {arc} already declared")
    return replace(model, triggers=model.triggers + (arc,))


# ---------------------------------------------------------------------------
# Flow graph
# ---------------------------------------------------------------------------


def flow_successors(model: StaticModel) -> Dict[ActionRef, List[ActionRef]]:
    succ: Dict[ActionRef, List[ActionRef]] = {}
    for arc in model.flows:
        succ.setdefault(arc.source, []).append(arc.target)
    return succ


def _exits_subtree(node: ActionRef, root: ThimacPath, succ: Dict[ActionRef, List[ActionRef]]) -> bool:
    """``node`` hands the thing out of ``root``'s subtree: a Transfer flowing
    out, or any node flowing into a Transfer outside."""
    return any(
        not t.thimac.is_within(root) and (node.kind is ActionKind.TRANSFER or t.kind is ActionKind.TRANSFER)
        for t in succ.get(node, ())
    )


def find_transit_paths(model: StaticModel) -> List[Tuple[ActionRef, ...]]:
    """Flow paths of external things passing through a thimac.

    A path starts at a Transfer node of thimac X that receives a flow from
    outside X, stays inside X's subtree without revisiting a node, and ends
    at a node of that subtree which hands the thing out: a Transfer flowing
    out, or any node flowing into a Transfer outside (the end may be the
    start node again). Paths are returned in discovery order: start nodes in
    declaration order, successors in arc order.
    """
    succ = flow_successors(model)
    entering: Set[ActionRef] = {
        arc.target
        for arc in model.flows
        if arc.target.kind is ActionKind.TRANSFER and not arc.source.thimac.is_within(arc.target.thimac)
    }
    paths: List[Tuple[ActionRef, ...]] = []
    for start in model.actions():
        if start not in entering:
            continue
        root = start.thimac
        stack: List[ActionRef] = [start]
        on_path: Set[ActionRef] = {start}

        def extend(node: ActionRef) -> None:
            for nxt in succ.get(node, ()):
                if not nxt.thimac.is_within(root):
                    continue
                if nxt == start:
                    if _exits_subtree(start, root, succ):
                        paths.append(tuple(stack) + (start,))
                    continue
                if nxt in on_path:
                    continue
                stack.append(nxt)
                on_path.add(nxt)
                if _exits_subtree(nxt, root, succ):
                    paths.append(tuple(stack))
                extend(nxt)
                stack.pop()
                on_path.discard(nxt)

        extend(start)
    log.debug("found %d transit paths in %r", len(paths), model.name)
    return paths


def transit_arcs(model: StaticModel) -> FrozenSet[FlowArc]:
    """Arcs lying on a transit path, or entering/leaving one at its ends."""
    arcs: Set[FlowArc] = set()
    for path in find_transit_paths(model):
        start, end = path[0], path[-1]
        root = start.thimac
        for a, b in zip(path, path[1:]):
            arcs.add(FlowArc(a, b))
        for arc in model.flows:
            if arc.target == start and not arc.source.thimac.is_within(root):
                arcs.add(arc)
            if arc.source == end and not arc.target.thimac.is_within(root) and (
                end.kind is ActionKind.TRANSFER or arc.target.kind is ActionKind.TRANSFER
            ):
                arcs.add(arc)
    return frozenset(arcs)


def classify_flow(model: StaticModel, arc: FlowArc) -> FlowKind:
    """Transit if on a transit path (or entering or leaving one), Self if both
    endpoints are the same root thimac, Internal otherwise.

    Raises:
        UnknownArc: ``arc`` is not one of the model's flows.
    """
    if arc not in model.flows:
        raise UnknownArc(f"{arc} is not a flow of this model")
    if arc in transit_arcs(model):
        return FlowKind.TRANSIT
    if arc.source.thimac == arc.target.thimac and arc.source.thimac.depth == 1:
        return FlowKind.SELF
    return FlowKind.INTERNAL


def classify_flows(model: StaticModel) -> Dict[FlowArc, FlowKind]:
    """Classification of every flow, computing the transit set once."""
    transit = transit_arcs(model)
    result: Dict[FlowArc, FlowKind] = {}
    for arc in model.flows:
        if arc in transit:
            result[arc] = FlowKind.TRANSIT
        elif arc.source.thimac == arc.target.thimac and arc.source.thimac.depth == 1:
            result[arc] = FlowKind.SELF
        else:
            result[arc] = FlowKind.INTERNAL
    return result
