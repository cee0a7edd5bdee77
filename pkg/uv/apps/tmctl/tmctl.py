#!/usr/bin/env python3
"""
Command-line driver for thinging-machine models.

Subcommands wire the packages together: parse a ``.tm`` file, check its
structure and events, simulate its chronology and emit tables or diagrams.
Standard output carries only the rendered result; diagnostics and errors go
to standard error.

Exit status: 0 clean, 1 diagnostics with errors (or warnings under
``--strict``), 2 usage or IO failure.
"""

import json
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional

import typer

import common
import tmcheck
import tmdsl
import tmemit
import tmevents
import tmsim

app = typer.Typer(help="Validate, simulate and render thinging-machine models", add_completion=False)

log = common.get_logger("tmctl")

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2


class OutputFormat(str, Enum):
    LEDGER = "ledger"
    EVENT_LOG = "event-log"
    HISTORY = "history"
    DOT_STATIC = "dot-static"
    DOT_EVENTS = "dot-events"


class TableStyle(str, Enum):
    TSV = "tsv"
    TEXT = "text"


class View(str, Enum):
    STATIC = "static"
    EVENTS = "events"


STRICT_OPTION = typer.Option(
    False,
    "--strict",
    envvar="TM_STRICT",
    help="Treat warnings as errors (or set TM_STRICT)",
)
STRICT_PAIRING_OPTION = typer.Option(
    False,
    "--strict-pairing",
    envvar="TM_STRICT_PAIRING",
    help="Reject Transfer -> Receive between thimacs (or set TM_STRICT_PAIRING)",
)
OUTPUT_OPTION = typer.Option(
    None,
    "--output",
    "-o",
    help="Write the result to this file instead of standard output",
)


@app.callback()
def configure(
    log_level: str = typer.Option(
        "WARNING",
        "--log-level",
        envvar="TM_LOG_LEVEL",
        help="Log level for messages on standard error (or set TM_LOG_LEVEL)",
    ),
):
    """Validate, simulate and render thinging-machine models."""
    try:
        common.configure_logging(log_level)
    except ValueError as e:
        common.eprint(f"Error: {e}")
        raise typer.Exit(EXIT_USAGE)


def _resolve(path: Path) -> Path:
    """``path`` itself, or the bundled fixture of that name when no such file exists."""
    if not path.exists() and path.name == str(path) and path.name in tmdsl.BUNDLED:
        log.info("using bundled %s", path.name)
        return tmdsl.bundled_path(path.name)
    return path


def _load(path: Path) -> tmdsl.ModelDocument:
    try:
        return tmdsl.parse_file(_resolve(path))
    except common.SourceUnavailable as e:
        common.eprint(f"Error: {e.message}")
        raise typer.Exit(EXIT_USAGE)
    except tmdsl.ParseError as e:
        for d in e.diagnostics:
            common.eprint(f"{path}:{d.span}: {d.format_line()}")
        raise typer.Exit(EXIT_DIAGNOSTICS)


def _report(diagnostics: List[common.Diagnostic]) -> None:
    for d in diagnostics:
        common.eprint(d.format_line())


def _status(diagnostics: List[common.Diagnostic], strict: bool) -> int:
    if common.has_errors(diagnostics) or (strict and diagnostics):
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def _event_diagnostics(doc: tmdsl.ModelDocument) -> List[common.Diagnostic]:
    diagnostics = tmevents.check_events(doc.model, doc.events)
    if doc.chronology is not None and not common.has_errors(diagnostics):
        diagnostics += tmevents.check_chronology(doc.model, doc.events, doc.chronology)
    return common.sorted_diagnostics(diagnostics)


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        typer.echo(text, nl=False)
        return
    try:
        with open(output, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        common.eprint(f"Error: cannot write {output}: {e}")
        raise typer.Exit(EXIT_USAGE)


@app.command()
def validate(
    path: Path = typer.Argument(..., help="Model file (.tm)"),
    strict: bool = STRICT_OPTION,
    strict_pairing: bool = STRICT_PAIRING_OPTION,
    json_report: bool = typer.Option(False, "--json", help="Print a JSON report on standard output"),
):
    """Check the static model against the structural rules."""
    doc = _load(path)
    diagnostics = tmcheck.validate(doc.model, tmcheck.ValidatorOptions(strict_pairing=strict_pairing))
    _report(diagnostics)
    status = _status(diagnostics, strict)
    if json_report:
        report = {
            "path": str(path),
            "status": status,
            "errors": sum(1 for d in diagnostics if d.is_error),
            "warnings": sum(1 for d in diagnostics if not d.is_error),
            "diagnostics": [d.to_dict() for d in diagnostics],
        }
        typer.echo(json.dumps(report, indent=2))
    raise typer.Exit(status)


@app.command()
def events(
    path: Path = typer.Argument(..., help="Model file (.tm)"),
    strict: bool = STRICT_OPTION,
):
    """Check event regions and the chronology; list the scheduled occurrences."""
    doc = _load(path)
    diagnostics = _event_diagnostics(doc)
    _report(diagnostics)
    status = _status(diagnostics, strict)
    if doc.chronology is not None and not common.has_errors(diagnostics):
        scheduled = tmevents.schedule(doc.events, tmevents.expand(doc.chronology))
        lines = [f"{s.occurrence}\t{s.time}\t{s.event.label}" for s in scheduled]
        typer.echo("".join(line + "\n" for line in lines), nl=False)
    raise typer.Exit(status)


def _table(header, rows, style: TableStyle) -> str:
    if style is TableStyle.TEXT:
        return tmemit.render_text(header, rows)
    return tmemit.render_tsv(header, rows)


@app.command()
def simulate(
    path: Path = typer.Argument(..., help="Model file (.tm)"),
    output_format: OutputFormat = typer.Option(OutputFormat.LEDGER, "--format", "-f", help="What to render"),
    group: Optional[str] = typer.Option(
        None, "--group", help="Entity thimac pattern for the history table, e.g. Table.Row"
    ),
    at: Optional[str] = typer.Option(None, "--at", help="Only history rows valid at this time (snapshot)"),
    fill_days: bool = typer.Option(False, "--fill-days", help="Add 'Nothing' rows for quiet days in the event log"),
    table: TableStyle = typer.Option(TableStyle.TSV, "--table", help="Table layout"),
    strict_pairing: bool = STRICT_PAIRING_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
):
    """Validate, run the chronology and render the result."""
    doc = _load(path)
    diagnostics = tmcheck.validate(doc.model, tmcheck.ValidatorOptions(strict_pairing=strict_pairing))
    diagnostics += _event_diagnostics(doc)
    _report(diagnostics)
    if common.has_errors(diagnostics):
        raise typer.Exit(EXIT_DIAGNOSTICS)

    if output_format is OutputFormat.DOT_STATIC:
        _write(tmemit.emit_dot(doc, "static"), output)
        raise typer.Exit(EXIT_OK)
    if output_format is OutputFormat.DOT_EVENTS:
        _write(tmemit.emit_dot(doc, "events"), output)
        raise typer.Exit(EXIT_OK)

    if doc.chronology is None:
        common.eprint(f"Error: {path} declares no chronology to simulate")
        raise typer.Exit(EXIT_USAGE)
    if output_format is OutputFormat.HISTORY and not group:
        common.eprint("Error: --format history needs --group")
        raise typer.Exit(EXIT_USAGE)
    snapshot_time = None
    if at is not None:
        try:
            snapshot_time = tmevents.TimePoint.parse(at)
        except tmevents.InvalidTime as e:
            common.eprint(f"Error: --at: {e.message}")
            raise typer.Exit(EXIT_USAGE)

    try:
        trace, ledger = tmsim.run(doc.model, doc.events, tmevents.expand(doc.chronology))
        if output_format is OutputFormat.LEDGER:
            text = tmsim.dump_ledger(ledger)
        elif output_format is OutputFormat.EVENT_LOG:
            rows = tmemit.emit_event_log(trace)
            if fill_days:
                rows = tmemit.fill_nothing_days(rows)
            text = _table(*tmemit.event_log_table(rows), table)
        else:
            history = tmemit.emit_history_table(ledger, group)
            if snapshot_time is not None:
                text = _table(*tmemit.snapshot_table(tmemit.snapshot(history, snapshot_time)), table)
            else:
                text = _table(*tmemit.history_table(history), table)
    except (tmsim.SimulationError, tmevents.EventError, tmemit.EmitError) as e:
        common.eprint(f"Error: {e}")
        raise typer.Exit(EXIT_DIAGNOSTICS)
    _write(text, output)
    raise typer.Exit(EXIT_OK)


@app.command("print")
def print_model(
    path: Path = typer.Argument(..., help="Model file (.tm)"),
    check: bool = typer.Option(False, "--check", help="Only check that the file is canonically formatted"),
    output: Optional[Path] = OUTPUT_OPTION,
):
    """Print the model in canonical form."""
    doc = _load(path)
    text = tmdsl.print_document(doc)
    if check:
        source = common.load_source(_resolve(path))
        if source != text:
            common.eprint(f"{path} is not canonically formatted")
            raise typer.Exit(EXIT_DIAGNOSTICS)
        raise typer.Exit(EXIT_OK)
    _write(text, output)


@app.command()
def export(
    path: Path = typer.Argument(..., help="Model file (.tm)"),
    view: View = typer.Option(View.STATIC, "--view", help="Diagram to draw"),
    output: Optional[Path] = OUTPUT_OPTION,
):
    """Draw the model as a Graphviz DOT digraph."""
    doc = _load(path)
    _write(tmemit.emit_dot(doc, view.value), output)


def main():
    app()


if __name__ == "__main__":
    sys.exit(main())
