import pytest

import tmdsl
from tmcheck import ALLOWED_CROSS, ALLOWED_SAME, RuleCode, ValidatorOptions, adjacency_allowed, validate
from tmcore import ActionKind, ActionRef, FlowArc, StaticModel, Thimac, TriggerArc

C, P, RL, T, RC = (
    ActionKind.CREATE,
    ActionKind.PROCESS,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
)


def ref(text):
    return ActionRef.parse(text)


def found(model, **options):
    return [(d.code, d.subject) for d in validate(model, ValidatorOptions(**options))]


def test_bundled_models_are_clean(johndoe, cheesehut):
    assert validate(johndoe.model) == []
    assert validate(cheesehut.model) == []


def test_bad_transit(bad_transit):
    assert found(bad_transit.model) == [
        ("TM-ADJ", "X.receive -> X.create"),
        ("TM-CREATE-INFLOW", "X.receive -> X.create"),
        ("TM-TRANSIT-CREATE", "X.create"),
    ]
    transit = next(d for d in validate(bad_transit.model) if d.code == "TM-TRANSIT-CREATE")
    assert "X.transfer -> X.receive -> X.create -> X.release -> X.transfer" in transit.message


def test_create_on_route_leaving_by_release():
    doc = tmdsl.parse(
        "thimac In { release }\nthimac X { transfer receive create release }\nthimac Out { transfer }\n"
        "flow In.release -> X.transfer\nflow X.transfer -> X.receive\nflow X.receive -> X.create\n"
        "flow X.create -> X.release\nflow X.release -> Out.transfer\n"
    )
    assert ("TM-TRANSIT-CREATE", "X.create") in found(doc.model)


def test_rule_codes():
    assert {c.value for c in RuleCode} == {
        "TM-ADJ",
        "TM-TRANSIT-CREATE",
        "TM-CREATE-INFLOW",
        "TM-TRIGGER-TARGET",
        "TM-ORPHAN",
        "TM-REF",
    }


def test_adjacency_tables():
    assert (T, RC) in ALLOWED_SAME
    assert (RC, C) not in ALLOWED_SAME
    assert ALLOWED_CROSS == {(RL, T), (T, T), (T, RC)}
    assert adjacency_allowed(T, RC, same_thimac=False)
    assert not adjacency_allowed(T, RC, same_thimac=False, strict_pairing=True)
    assert adjacency_allowed(T, T, same_thimac=False, strict_pairing=True)


def test_strict_pairing():
    doc = tmdsl.parse(
        "thimac A { create release transfer }\nthimac B { receive process }\n"
        "flow A.create -> A.release\nflow A.release -> A.transfer\n"
        "flow A.transfer -> B.receive\nflow B.receive -> B.process\n"
    )
    assert found(doc.model) == []
    assert found(doc.model, strict_pairing=True) == [("TM-ADJ", "A.transfer -> B.receive")]


def test_orphans_warn_but_exempt_creates_and_attributes():
    doc = tmdsl.parse(
        "thimac A {\n  create process release\n  attribute Tag\n}\nflow A.create -> A.process\n"
    )
    diagnostics = validate(doc.model)
    assert [(d.code, d.subject, d.is_error) for d in diagnostics] == [("TM-ORPHAN", "A.release", False)]


def test_unresolved_references_in_hand_built_models():
    model = StaticModel(
        "m",
        roots=(Thimac("A", actions=(C,)),),
        flows=(FlowArc(ref("A.create"), ref("B.process")),),
    )
    assert found(model) == [("TM-REF", "A.create -> B.process")]


def test_trigger_targets_in_hand_built_models():
    model = StaticModel(
        "m",
        roots=(Thimac("A", actions=(C, P)), Thimac("B", actions=(C, P))),
        flows=(FlowArc(ref("A.create"), ref("A.process")), FlowArc(ref("B.create"), ref("B.process"))),
        triggers=(
            TriggerArc(ref("A.process"), ref("B.process")),
            TriggerArc(ref("A.process"), ref("A.create")),
        ),
    )
    assert found(model) == [
        ("TM-TRIGGER-TARGET", "A.process => B.process"),
        ("TM-TRIGGER-TARGET", "A.process => A.create"),
    ]


SAME_OK = {(T, RC), (RC, P), (RC, RL), (P, RL), (C, P), (C, RL), (RL, T)}
CROSS_OK = {(RL, T), (T, T), (T, RC)}


@pytest.mark.parametrize("source", list(ActionKind))
@pytest.mark.parametrize("target", list(ActionKind))
def test_adjacency_between_thimacs(source, target):
    every = (C, P, RL, T, RC)
    model = StaticModel(
        "pair",
        roots=(Thimac("A", actions=every), Thimac("B", actions=every)),
        flows=(FlowArc(ActionRef.parse(f"A.{source.value}"), ActionRef.parse(f"B.{target.value}")),),
    )
    codes = {d.code for d in validate(model) if d.code == "TM-ADJ"}
    assert (codes == set()) == ((source, target) in CROSS_OK)
