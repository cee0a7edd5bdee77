"""Structural rules for thinging-machine static models.

``validate`` runs every rule in ``ALL_RULES`` and returns the findings
sorted by (rule code, declaration order, message). Rules never raise for
modelling mistakes; an empty list means the model is clean.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple

import common
from tmcore import ActionKind, ActionRef, StaticModel, find_transit_paths

log = common.get_logger(__name__)

__all__ = [
    "ALLOWED_CROSS",
    "ALLOWED_SAME",
    "ALL_RULES",
    "RuleCode",
    "ValidatorOptions",
    "adjacency_allowed",
    "find_transit_paths",
    "validate",
]

C, P, RL, T, RC = (
    ActionKind.CREATE,
    ActionKind.PROCESS,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
)

# Arrows of the generic machine, inside one thimac.
ALLOWED_SAME: FrozenSet[Tuple[ActionKind, ActionKind]] = frozenset(
    {(T, RC), (RC, P), (RC, RL), (P, RL), (C, P), (C, RL), (RL, T)}
)
# Between thimacs. Transfer -> Receive stands for an elided peer transfer.
ALLOWED_CROSS: FrozenSet[Tuple[ActionKind, ActionKind]] = frozenset({(RL, T), (T, T), (T, RC)})


class RuleCode(Enum):
    ADJ = "TM-ADJ"
    TRANSIT_CREATE = "TM-TRANSIT-CREATE"
    CREATE_INFLOW = "TM-CREATE-INFLOW"
    TRIGGER_TARGET = "TM-TRIGGER-TARGET"
    ORPHAN = "TM-ORPHAN"
    REF = "TM-REF"


@dataclass(frozen=True)
class ValidatorOptions:
    # Require Transfer -> Transfer between thimacs.
    strict_pairing: bool = False


def adjacency_allowed(source: ActionKind, target: ActionKind, same_thimac: bool,
                      strict_pairing: bool = False) -> bool:
    if same_thimac:
        return (source, target) in ALLOWED_SAME
    if strict_pairing and (source, target) == (T, RC):
        return False
    return (source, target) in ALLOWED_CROSS


Rule = Callable[[StaticModel, ValidatorOptions], List[common.Diagnostic]]


def _error(code: RuleCode, subject, message: str, order: int) -> common.Diagnostic:
    return common.error(code.value, str(subject), message, order=order)


def check_references(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    found = []
    for i, arc in enumerate(model.arcs()):
        for end in (arc.source, arc.target):
            if not model.resolves(end):
                found.append(_error(RuleCode.REF, arc, f"{end} is not a declared action", i))
    return found


def check_adjacency(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    found = []
    for i, arc in enumerate(model.flows):
        if not (model.resolves(arc.source) and model.resolves(arc.target)):
            continue
        same = arc.source.thimac == arc.target.thimac
        if adjacency_allowed(arc.source.kind, arc.target.kind, same, options.strict_pairing):
            continue
        where = "within a thimac" if same else "between thimacs"
        found.append(
            _error(
                RuleCode.ADJ,
                arc,
                f"{arc.source.kind.title} -> {arc.target.kind.title} is not allowed {where}",
                i,
            )
        )
    return found


def check_create_inflow(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    return [
        _error(
            RuleCode.CREATE_INFLOW,
            arc,
            f"flow into {arc.target}; creation is realised by a trigger",
            i,
        )
        for i, arc in enumerate(model.flows)
        if arc.target.kind is ActionKind.CREATE
    ]


def check_triggers(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    found = []
    offset = len(model.flows)
    for i, arc in enumerate(model.triggers, start=offset):
        if arc.target.kind is not ActionKind.CREATE:
            found.append(_error(RuleCode.TRIGGER_TARGET, arc, f"trigger target {arc.target} is not a create", i))
        elif arc.source.thimac == arc.target.thimac:
            found.append(_error(RuleCode.TRIGGER_TARGET, arc, f"trigger stays inside {arc.source.thimac}", i))
    return found


def check_transit_create(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    order = model.action_order()
    flagged: Dict[ActionRef, Tuple[ActionRef, ...]] = {}
    for path in find_transit_paths(model):
        for node in path:
            if node.kind is ActionKind.CREATE and node not in flagged:
                flagged[node] = path
    return [
        _error(
            RuleCode.TRANSIT_CREATE,
            node,
            f"create on the transit path {' -> '.join(str(n) for n in path)}",
            order.get(node, len(order)),
        )
        for node, path in flagged.items()
    ]


def check_orphans(model: StaticModel, options: ValidatorOptions) -> List[common.Diagnostic]:
    connected: Set[ActionRef] = set()
    for arc in model.arcs():
        connected.add(arc.source)
        connected.add(arc.target)
    found = []
    for i, ref in enumerate(model.actions()):
        if ref in connected or ref.kind is ActionKind.CREATE or model.is_attribute(ref.thimac):
            continue
        found.append(common.warning(RuleCode.ORPHAN.value, str(ref), "action has no flow or trigger", order=i))
    return found


ALL_RULES: Tuple[Rule, ...] = (
    check_references,
    check_adjacency,
    check_create_inflow,
    check_triggers,
    check_transit_create,
    check_orphans,
)


def validate(model: StaticModel, options: Optional[ValidatorOptions] = None) -> List[common.Diagnostic]:
    """All structural findings for ``model``."""
    options = options or ValidatorOptions()
    diagnostics: List[common.Diagnostic] = []
    for rule in ALL_RULES:
        diagnostics.extend(rule(model, options))
    log.debug("validated %r: %d findings", model.name, len(diagnostics))
    return common.sorted_diagnostics(diagnostics)
