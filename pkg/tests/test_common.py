import logging
import sys

import pytest

import common


def test_diagnostic_format_and_dict():
    d = common.error("TM-ADJ", "A.create -> A.receive", "not allowed", common.SourceSpan(3, 7, 4))
    assert d.is_error
    assert d.format_line() == "error TM-ADJ A.create -> A.receive: not allowed"
    assert d.to_dict() == {
        "severity": "error",
        "code": "TM-ADJ",
        "subject": "A.create -> A.receive",
        "message": "not allowed",
        "line": 3,
        "column": 7,
    }


def test_diagnostic_equality_ignores_span_and_order():
    a = common.warning("TM-ORPHAN", "A.process", "x", common.SourceSpan(1, 1), order=4)
    b = common.warning("TM-ORPHAN", "A.process", "x")
    assert a == b
    assert not a.is_error
    assert not common.has_errors([a, b])


def test_sorted_diagnostics_orders_by_code_then_declaration():
    found = [
        common.error("TM-REF", "b", "m", order=0),
        common.error("TM-ADJ", "z", "m", order=2),
        common.error("TM-ADJ", "a", "m", order=1),
    ]
    assert [(d.code, d.subject) for d in common.sorted_diagnostics(found)] == [
        ("TM-ADJ", "a"),
        ("TM-ADJ", "z"),
        ("TM-REF", "b"),
    ]


def test_span_rejects_non_positive_positions():
    with pytest.raises(ValueError):
        common.SourceSpan(0, 1)
    assert str(common.SourceSpan(12, 5, 3)) == "12:5"


def test_load_source_normalises_line_endings(tmp_path):
    path = tmp_path / "crlf.tm"
    path.write_bytes(b"thimac A {\r\n  create\r\n}\r\n")
    assert common.load_source(path) == "thimac A {\n  create\n}\n"


def test_load_source_missing_file(tmp_path):
    with pytest.raises(common.SourceUnavailable) as info:
        common.load_source(tmp_path / "absent.tm")
    assert info.value.code == "SourceUnavailable"


def test_error_str_includes_span():
    err = common.TmError("boom", common.SourceSpan(2, 9))
    assert str(err) == "TmError at 2:9: boom"
    assert str(common.TmError("boom")) == "TmError: boom"


def test_configure_logging_installs_one_handler():
    logger = common.configure_logging("debug")
    common.configure_logging("INFO")
    handlers = [h for h in logger.handlers if getattr(h, "_tm_handler", False)]
    assert len(handlers) == 1
    assert handlers[0].stream is sys.stderr
    assert logger.level == logging.INFO
    assert common.get_logger("tmsim").name == "tm.tmsim"
    common.configure_logging("WARNING")


def test_configure_logging_rejects_unknown_level():
    with pytest.raises(ValueError):
        common.configure_logging("LOUD")
