import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import click

from .. import __version__
from ..config import get_settings
from ..exceptions import (
    CertificateRejected,
    CorruptState,
    DomainError,
    PatchConflict,
    ProgramSyntaxError,
    StateLocked,
)
from ..schemas.certificate import CallPattern, Certificate
from ..schemas.state import ConsumerState
from ..services import Certifier, Checker, IncrementalCertifier, IncrementalChecker, UpdateManager
from ..store import StateDir, load_package, load_state, read_text, save_package, save_state
from ..store import codec

logger = logging.getLogger(__name__)

EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_STATE = 3


@contextmanager
def reported_errors() -> Iterator[None]:
    """Turn toolkit errors into a diagnostic on stderr and an exit code"""
    try:
        yield
    except CertificateRejected as error:
        click.echo(click.style(f"rejected: {error}", fg="red"), err=True)
        sys.exit(EXIT_REJECTED)
    except (ProgramSyntaxError, PatchConflict, DomainError, FileNotFoundError) as error:
        click.echo(f"error: {error}", err=True)
        sys.exit(EXIT_USAGE)
    except (CorruptState, StateLocked) as error:
        click.echo(f"error: {error}", err=True)
        sys.exit(EXIT_STATE)
    except OSError as error:
        click.echo(f"error: cannot write {error.filename or ''}: {error.strerror or error}", err=True)
        sys.exit(EXIT_STATE)


def _parse_queries(ctx: click.Context, param: click.Parameter, values: Tuple[str, ...]) -> List[CallPattern]:
    queries = []
    for value in values:
        try:
            queries.append(codec.parse_query(value))
        except ProgramSyntaxError as error:
            raise click.BadParameter(f"{value!r}: {error}") from None
    return queries


def _read_program(path: str):
    return codec.parse_program(read_text(path))


def _plural(count: int, noun: str) -> str:
    if count == 1:
        return f"{count} {noun}"
    if noun.endswith("y"):
        return f"{count} {noun[:-1]}ies"
    return f"{count} {noun}s"


def _size(certificate: Certificate) -> str:
    text = codec.format_certificate(certificate)
    return f"{_plural(len(certificate), 'entry')}, {len(text.encode('utf-8'))} bytes"


def _timing(started: float) -> None:
    click.echo(f"# elapsed {time.perf_counter() - started:.3f}s")


def _strict_mode(strict: Optional[bool]) -> bool:
    return get_settings().strict_check if strict is None else strict


query_option = click.option(
    "--query", "-q", "queries", multiple=True, required=True, callback=_parse_queries,
    help="Entry call pattern, e.g. 'rev(X,Y):true' (repeatable)",
)
stats_option = click.option("--stats", is_flag=True, help="Print traversal counters and certificate sizes")
mode_option = click.option(
    "--strict/--lenient", default=None,
    help="Require recomputed answers to equal the certificate (default from ACC_STRICT)",
)


@click.group()
@click.version_option(__version__, prog_name="incacc")
def cli():
    """Certificates for logic programs and their incremental updates"""


@cli.command()
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@query_option
@click.option("--state", "state_dir", type=click.Path(file_okay=False), help="Producer state directory to write")
@click.option("--cert", "cert_file", type=click.Path(dir_okay=False), help="Write the certificate to this file")
@stats_option
def certify(program, queries, state_dir, cert_file, stats):
    """Analyze PROGRAM and produce its certificate"""
    started = time.perf_counter()
    with reported_errors():
        parsed = _read_program(program)
        result = Certifier().certify(parsed, queries)
        state = ConsumerState(program=parsed, answers=result.answers, arcs=result.arcs, queries=tuple(queries))
        if state_dir:
            with StateDir(state_dir).lock():
                save_state(state_dir, state)
        if cert_file:
            Path(cert_file).write_text(codec.format_certificate(result.answers), encoding="utf-8")
        if not state_dir and not cert_file:
            click.echo(codec.format_certificate(result.answers), nl=False)
    click.echo(f"certified {_plural(len(result.answers), 'entry')}, {_plural(len(result.arcs), 'arc')}", err=True)
    if stats:
        click.echo(f"traversals: {result.traversals}")
        click.echo(f"certificate: {_size(result.answers)}")
        _timing(started)


@cli.command()
@click.argument("old", type=click.Path(exists=True, dir_okay=False))
@click.argument("new", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Update file to write (stdout when absent)")
def diff(old, new, output):
    """Compute the update turning OLD into NEW"""
    with reported_errors():
        manager = UpdateManager()
        update = manager.diff(_read_program(new), _read_program(old))
        text = codec.format_update(update)
        if output:
            Path(output).write_text(text, encoding="utf-8")
        else:
            click.echo(text, nl=False)
    click.echo(f"{manager.classify(update).value} update touching {_plural(len(update.tuples), 'predicate')}", err=True)


@cli.command("inc-certify")
@click.option("--state", "state_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.argument("update_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", "package", required=True, type=click.Path(file_okay=False), help="Package directory")
@click.option("--reuse/--no-reuse", default=None, help="Ship an empty certificate for pure deletions")
@stats_option
def inc_certify(state_dir, update_file, package, reuse, stats):
    """Build the update package for UPDATE_FILE and advance the producer state"""
    started = time.perf_counter()
    if reuse is None:
        reuse = get_settings().reuse_deletions
    with reported_errors():
        with StateDir(state_dir).lock():
            # Step 1: previous state and the update
            state = load_state(state_dir)
            update = codec.parse_update(read_text(update_file))

            # Step 2: extended and incremental certificates
            result = IncrementalCertifier().ext_certify(state.program, update, state.queries, base=state, reuse=reuse)

            # Step 3: ship the package, then supersede the producer state
            save_package(package, update, result.inc)
            save_state(state_dir, result.state)
    click.echo(
        f"{result.update_class.value} update: incremental certificate with {_plural(len(result.inc), 'entry')}",
        err=True,
    )
    if stats:
        click.echo(f"traversals: {result.traversals}")
        click.echo(f"incremental certificate: {_size(result.inc)}")
        click.echo(f"full certificate: {_size(result.state.answers)}")
        _timing(started)


@cli.command()
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.option("--cert", "cert_file", required=True, type=click.Path(exists=True, dir_okay=False))
@query_option
@mode_option
@click.option("--state", "state_dir", type=click.Path(file_okay=False), help="Consumer state directory to initialize")
@stats_option
def check(program, cert_file, queries, strict, state_dir, stats):
    """Check a full certificate for PROGRAM"""
    started = time.perf_counter()
    with reported_errors():
        parsed = _read_program(program)
        certificate = codec.parse_certificate(read_text(cert_file))
        result = Checker().check(parsed, queries, certificate, _strict_mode(strict))
        if state_dir:
            state = ConsumerState(program=parsed, answers=result.answers, arcs=result.arcs, queries=tuple(queries))
            with StateDir(state_dir).lock():
                save_state(state_dir, state)
    click.echo(f"certificate accepted: {_plural(len(result.answers), 'entry')}, {_plural(len(result.arcs), 'arc')}")
    if stats:
        click.echo(f"traversals: {result.traversals}")
        _timing(started)


@cli.command("inc-check")
@click.option("--state", "state_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.argument("package", type=click.Path(exists=True, file_okay=False))
@mode_option
@stats_option
def inc_check(state_dir, package, strict, stats):
    """Validate the update PACKAGE against the consumer state and commit it"""
    started = time.perf_counter()
    with reported_errors():
        with StateDir(state_dir).lock():
            # Step 1: persisted state and the package
            state = load_state(state_dir)
            update, inc = load_package(package)

            # Steps 2-4: recheck, propagate, drop unreachable entries
            result = IncrementalChecker().inc_check(state, update, inc, _strict_mode(strict))

            # Step 5: commit
            save_state(state_dir, result.state)
    click.echo(f"{_plural(result.changed, 'entry')} changed, {_plural(result.rechecked, 'entry')} rechecked")
    click.echo(
        f"state: {_plural(len(result.state.answers), 'entry')}, {_plural(len(result.state.arcs), 'arc')}"
    )
    if stats:
        click.echo(f"traversals: {result.traversals}")
        click.echo(f"removed: {result.removed}")
        click.echo(f"incremental certificate: {_size(inc)}")
        _timing(started)


@cli.command()
@click.option("--state", "state_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--policy", "policy_file", required=True, type=click.Path(exists=True, dir_okay=False))
def trust(state_dir, policy_file):
    """Decide whether the certified state satisfies a safety policy"""
    with reported_errors():
        state = load_state(state_dir)
        policy = codec.parse_policy(read_text(policy_file))
        report = Certifier().vc_check(state.answers, policy)
    if not report.trusted:
        for line in report.diagnostics():
            click.echo(line, err=True)
        click.echo(click.style("untrusted", fg="red"))
        sys.exit(EXIT_REJECTED)
    click.echo(f"trusted ({_plural(len(policy.required), 'requirement')})")
