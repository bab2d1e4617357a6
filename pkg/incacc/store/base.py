import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, Iterator, Tuple, TypeVar, Union

from ..exceptions import CorruptState, IncaccError, ProgramSyntaxError, StateLocked
from ..schemas.certificate import Certificate, IncrementalCertificate
from ..schemas.state import ConsumerState
from ..schemas.update import Update
from . import codec

logger = logging.getLogger(__name__)

T = TypeVar("T")

PROGRAM_FILE = "program.pl"
ANSWERS_FILE = "answers.cert"
ARCS_FILE = "deps.dat"
QUERIES_FILE = "queries.q"
LOCK_FILE = "lock"
JOURNAL_FILE = "commit"

UPDATE_FILE = "update.upd"
INC_CERT_FILE = "inc.cert"

PathLike = Union[str, Path]


class StateDir:
    """A directory holding persisted analysis state"""

    def __init__(self, path: PathLike):
        self.path = Path(path)

    @property
    def program_file(self) -> Path:
        return self.path / PROGRAM_FILE

    @property
    def answers_file(self) -> Path:
        return self.path / ANSWERS_FILE

    @property
    def arcs_file(self) -> Path:
        return self.path / ARCS_FILE

    @property
    def queries_file(self) -> Path:
        return self.path / QUERIES_FILE

    @property
    def lock_file(self) -> Path:
        return self.path / LOCK_FILE

    @contextmanager
    def lock(self) -> Iterator["StateDir"]:
        """Hold the advisory lock of the directory"""
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock_file, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StateLocked(self.path) from None
        try:
            os.write(fd, f"{os.getpid()}\n".encode())
            os.close(fd)
            recover(self.path)
            yield self
        finally:
            self.lock_file.unlink(missing_ok=True)


def write_files(directory: PathLike, contents: Dict[str, str]) -> None:
    """
    Replace files in `directory` as one generation.

    Every new file is staged next to its target. Renaming the journal that
    lists the staged files is the commit point; a crash after it is rolled
    forward by `recover`, a failure before it leaves the old files as they were.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    staged: Dict[str, str] = {}
    try:
        for name, text in contents.items():
            staged[name] = _stage(directory, name, text)
        journal = "".join(f"{Path(temp).name} {name}\n" for name, temp in staged.items())
        staged[JOURNAL_FILE] = _stage(directory, JOURNAL_FILE, journal)
        # Commit point
        os.replace(staged[JOURNAL_FILE], directory / JOURNAL_FILE)
    except OSError:
        for temp in staged.values():
            Path(temp).unlink(missing_ok=True)
        raise
    _roll_forward(directory)


def _stage(directory: Path, name: str, text: str) -> str:
    fd, temp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError:
        Path(temp).unlink(missing_ok=True)
        raise
    return temp


def _roll_forward(directory: Path) -> None:
    journal = directory / JOURNAL_FILE
    if not journal.is_file():
        return
    for line in journal.read_text(encoding="utf-8").splitlines():
        temp, name = line.split(" ", 1)
        # already moved when an earlier roll-forward was interrupted
        if (directory / temp).is_file():
            os.replace(directory / temp, directory / name)
    journal.unlink()
    logger.debug("committed generation in %s", directory)


def recover(path: PathLike) -> None:
    """Finish an interrupted commit and drop files staged for an abandoned one"""
    directory = Path(path)
    if not directory.is_dir():
        return
    _roll_forward(directory)
    for stale in directory.glob(".*.tmp"):
        logger.info("discarding uncommitted %s", stale.name)
        stale.unlink(missing_ok=True)


def read_text(path: PathLike) -> str:
    """UTF-8 contents of `path`; undecodable bytes are a syntax error at their line"""
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as error:
        line = data.count(b"\n", 0, error.start) + 1
        raise ProgramSyntaxError(f"invalid UTF-8 in {Path(path).name}", line) from None


def _read(directory: Path, name: str, parse: Callable[[str], T]) -> T:
    path = directory / name
    if not path.is_file():
        raise CorruptState(directory, f"missing {name}")
    try:
        return parse(read_text(path))
    except (IncaccError, ValueError) as error:
        raise CorruptState(directory, f"{name}: {error}") from None


def save_state(path: PathLike, state: ConsumerState) -> None:
    """Persist `state` as the four canonical text files"""
    write_files(
        path,
        {
            PROGRAM_FILE: codec.format_program(state.program),
            ANSWERS_FILE: codec.format_certificate(state.answers),
            ARCS_FILE: codec.format_arcs(state.arcs),
            QUERIES_FILE: codec.format_queries(state.queries),
        },
    )
    logger.info("state saved to %s: %d entries, %d arcs", path, len(state.answers), len(state.arcs))


def load_state(path: PathLike) -> ConsumerState:
    """
    Read a state directory and validate it.

    Raises:
        CorruptState: a file is missing, does not parse, or the files
            disagree with each other
    """
    directory = Path(path)
    _roll_forward(directory)
    program = _read(directory, PROGRAM_FILE, codec.parse_program)
    answers = _read(directory, ANSWERS_FILE, codec.parse_certificate)
    arcs = _read(directory, ARCS_FILE, codec.parse_arcs)
    queries = _read(directory, QUERIES_FILE, codec.parse_queries)
    try:
        state = ConsumerState(program=program, answers=answers, arcs=arcs, queries=queries)
    except ValueError as error:
        raise CorruptState(directory, str(error)) from None
    problem = state.consistency_error()
    if problem is not None:
        raise CorruptState(directory, problem)
    return state


def save_package(path: PathLike, update: Update, inc: Certificate) -> None:
    write_files(
        path,
        {
            UPDATE_FILE: codec.format_update(update),
            INC_CERT_FILE: codec.format_certificate(inc),
        },
    )


def load_package(path: PathLike) -> Tuple[Update, IncrementalCertificate]:
    """Read an update package; parse errors are reported as they are"""
    directory = Path(path)
    for name in (UPDATE_FILE, INC_CERT_FILE):
        if not (directory / name).is_file():
            raise FileNotFoundError(f"package {directory} has no {name}")
    update = codec.parse_update(read_text(directory / UPDATE_FILE))
    inc = codec.parse_inc_certificate(read_text(directory / INC_CERT_FILE))
    return update, inc
