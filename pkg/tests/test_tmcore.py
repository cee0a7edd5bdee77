import pytest

from tmcore import (
    ActionKind,
    ActionRef,
    AttributeRuleViolation,
    DuplicateArc,
    DuplicateName,
    FlowArc,
    FlowKind,
    InvalidIdentifier,
    SelfLoop,
    StaticModel,
    ThimacPath,
    TriggerTargetNotCreate,
    TriggerWithinThimac,
    UnknownArc,
    UnknownParent,
    UnresolvedRef,
    add_flow,
    add_thimac,
    add_trigger,
    classify_flow,
    classify_flows,
    find_transit_paths,
    transit_arcs,
)

C, P, RL, T, RC = (
    ActionKind.CREATE,
    ActionKind.PROCESS,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
)


def ref(text):
    return ActionRef.parse(text)


def shop():
    m = add_thimac(StaticModel("shop"), None, "Shop", [C, P])
    m = add_thimac(m, ThimacPath.of("Shop"), "Till", [RL, C, P])
    m = add_thimac(m, ThimacPath.of("Shop", "Till"), "Total", [C], attribute=True)
    return m


def test_thimac_path_parse_and_print():
    p = ThimacPath.parse("Table.Row[3].Price")
    assert p.segments == ("Table", "Row", "Price")
    assert p.instances == (None, 3, None)
    assert str(p) == "Table.Row[3].Price"
    assert p.static() == ThimacPath.of("Table", "Row", "Price")
    assert p.parent == ThimacPath.parse("Table.Row[3]")
    assert not p.is_static
    assert p.is_within(ThimacPath.parse("Table.Row[3]"))
    assert not p.is_within(ThimacPath.parse("Table.Row[2]"))
    assert ThimacPath.of("Table").parent is None


@pytest.mark.parametrize("text", ["", "1abc", "A..B", "A.B[x]", "A.B[-1]"])
def test_thimac_path_rejects_bad_text(text):
    with pytest.raises(InvalidIdentifier):
        ThimacPath.parse(text)


def test_action_ref_parse():
    r = ref("Table.Row[1].create")
    assert r.kind is C
    assert str(r) == "Table.Row[1].create"
    assert r.static() == ref("Table.Row.create")
    with pytest.raises(InvalidIdentifier):
        ActionRef.parse("create")
    with pytest.raises(ValueError):
        ActionRef.parse("A.destroy")


def test_actions_are_canonical_and_in_declaration_order():
    m = shop()
    till = m.find(ThimacPath.of("Shop", "Till"))
    assert till.actions == (C, P, RL)
    assert [str(a) for a in m.actions()] == [
        "Shop.create",
        "Shop.process",
        "Shop.Till.create",
        "Shop.Till.process",
        "Shop.Till.release",
        "Shop.Till.Total.create",
    ]
    assert m.is_attribute(ThimacPath.of("Shop", "Till", "Total"))


def test_add_thimac_errors():
    m = shop()
    with pytest.raises(UnknownParent):
        add_thimac(m, ThimacPath.of("Nowhere"), "X")
    with pytest.raises(DuplicateName):
        add_thimac(m, ThimacPath.of("Shop"), "Till")
    with pytest.raises(DuplicateName):
        add_thimac(m, None, "Shop")
    with pytest.raises(AttributeRuleViolation):
        add_thimac(m, ThimacPath.of("Shop"), "Name", [P], attribute=True)
    with pytest.raises(AttributeRuleViolation):
        add_thimac(m, ThimacPath.of("Shop", "Till", "Total"), "Cents", [C])
    with pytest.raises(InvalidIdentifier):
        add_thimac(m, None, "event")
    with pytest.raises(InvalidIdentifier):
        add_thimac(m, None, "9lives")


def test_builders_return_new_models():
    m = shop()
    m2 = add_flow(m, ref("Shop.create"), ref("Shop.process"))
    assert m.flows == ()
    assert m2.flows == (FlowArc(ref("Shop.create"), ref("Shop.process")),)


def test_add_flow_errors():
    m = shop()
    with pytest.raises(UnresolvedRef):
        add_flow(m, ref("Shop.create"), ref("Shop.release"))
    with pytest.raises(SelfLoop):
        add_flow(m, ref("Shop.create"), ref("Shop.create"))
    m = add_flow(m, ref("Shop.create"), ref("Shop.process"))
    with pytest.raises(DuplicateArc):
        add_flow(m, ref("Shop.create"), ref("Shop.process"))
    with pytest.raises(InvalidIdentifier):
        add_flow(m, ref("Shop.Till[1].create"), ref("Shop.Till[1].process"))


def test_add_trigger_errors():
    m = shop()
    with pytest.raises(TriggerTargetNotCreate):
        add_trigger(m, ref("Shop.process"), ref("Shop.Till.process"))
    with pytest.raises(TriggerWithinThimac):
        add_trigger(m, ref("Shop.Till.process"), ref("Shop.Till.create"))
    m = add_trigger(m, ref("Shop.process"), ref("Shop.Till.create"))
    with pytest.raises(DuplicateArc):
        add_trigger(m, ref("Shop.process"), ref("Shop.Till.create"))
    assert [str(a) for a in m.arcs()] == ["Shop.process => Shop.Till.create"]


def test_transit_path_in_bad_transit(bad_transit):
    paths = find_transit_paths(bad_transit.model)
    assert [[str(n) for n in p] for p in paths] == [
        ["X.transfer", "X.receive", "X.create", "X.release", "X.transfer"],
    ]


def test_classify_flows(bad_transit):
    m = bad_transit.model
    kinds = {str(arc): kind for arc, kind in classify_flows(m).items()}
    assert kinds["In.create -> In.release"] is FlowKind.SELF
    assert kinds["Out.transfer -> Out.receive"] is FlowKind.SELF
    assert kinds["In.release -> X.transfer"] is FlowKind.TRANSIT
    assert kinds["X.receive -> X.create"] is FlowKind.TRANSIT
    assert kinds["X.transfer -> Out.transfer"] is FlowKind.TRANSIT
    assert sum(1 for k in kinds.values() if k is FlowKind.TRANSIT) == 6
    for arc in m.flows:
        assert classify_flow(m, arc) is classify_flows(m)[arc]
    assert len(transit_arcs(m)) == 6


def test_nested_flows_are_internal():
    m = shop()
    m = add_flow(m, ref("Shop.Till.create"), ref("Shop.Till.process"))
    m = add_flow(m, ref("Shop.create"), ref("Shop.process"))
    kinds = classify_flows(m)
    assert kinds[FlowArc(ref("Shop.Till.create"), ref("Shop.Till.process"))] is FlowKind.INTERNAL
    assert kinds[FlowArc(ref("Shop.create"), ref("Shop.process"))] is FlowKind.SELF


def test_classify_unknown_arc():
    with pytest.raises(UnknownArc):
        classify_flow(shop(), FlowArc(ref("Shop.create"), ref("Shop.process")))


def test_johndoe_transit_through_new_address(johndoe):
    paths = find_transit_paths(johndoe.model)
    assert [[str(n) for n in p] for p in paths] == [["Address2.transfer", "Address2.receive", "Address2.release"]]
    transit = sorted(str(a) for a, k in classify_flows(johndoe.model).items() if k is FlowKind.TRANSIT)
    assert transit == [
        "Address2.receive -> Address2.release",
        "Address2.release -> Database.transfer",
        "Address2.transfer -> Address2.receive",
        "Person.release -> Address2.transfer",
    ]


def pass_through(*extra):
    m = add_thimac(StaticModel("pass"), None, "In", [RL])
    m = add_thimac(m, None, "X", [T, RC, P, RL])
    m = add_thimac(m, None, "Out", [T])
    chain = [
        ("In.release", "X.transfer"),
        ("X.transfer", "X.receive"),
        ("X.receive", "X.process"),
        ("X.process", "X.release"),
        ("X.release", "Out.transfer"),
    ]
    for source, target in chain + list(extra):
        m = add_flow(m, ref(source), ref(target))
    return m


def test_transit_leaving_by_release():
    m = pass_through()
    assert [[str(n) for n in p] for p in find_transit_paths(m)] == [
        ["X.transfer", "X.receive", "X.process", "X.release"],
    ]
    assert all(k is FlowKind.TRANSIT for k in classify_flows(m).values())


def test_parallel_transit_chains():
    m = pass_through(("X.receive", "X.release"))
    assert sorted([str(n) for n in p] for p in find_transit_paths(m)) == [
        ["X.transfer", "X.receive", "X.process", "X.release"],
        ["X.transfer", "X.receive", "X.release"],
    ]


def test_no_transit_without_boundary_crossing():
    m = add_thimac(StaticModel("inside"), None, "A", [C, P])
    m = add_flow(m, ref("A.create"), ref("A.process"))
    assert find_transit_paths(m) == []
