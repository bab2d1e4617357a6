import pytest
from click.testing import CliRunner

from incacc import __version__
from incacc.cli import cli

REV = "rev(X,Y):true"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def producer(runner, programs_dir):
    """Producer state and certificate for P0"""
    state = programs_dir / "producer"
    cert = programs_dir / "p0.cert"
    result = runner.invoke(
        cli, ["certify", str(programs_dir / "p0.pl"), "-q", REV, "--state", str(state), "--cert", str(cert)]
    )
    assert result.exit_code == 0, result.output
    return state, cert


@pytest.fixture
def consumer(runner, programs_dir, producer):
    """Consumer state initialized by a full check of P0"""
    _, cert = producer
    state = programs_dir / "consumer"
    result = runner.invoke(
        cli, ["check", str(programs_dir / "p0.pl"), "--cert", str(cert), "-q", REV, "--state", str(state)]
    )
    assert result.exit_code == 0, result.output
    assert "certificate accepted: 2 entries, 3 arcs" in result.output
    return state


def ship(runner, programs_dir, producer_state, old, new, name):
    update_file = programs_dir / f"{name}.upd"
    result = runner.invoke(cli, ["diff", str(programs_dir / old), str(programs_dir / new), "-o", str(update_file)])
    assert result.exit_code == 0, result.output
    package = programs_dir / name
    result = runner.invoke(
        cli, ["inc-certify", "--state", str(producer_state), str(update_file), "-o", str(package), "--stats"]
    )
    assert result.exit_code == 0, result.output
    return package, result.output


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_certify_prints_the_certificate(runner, programs_dir):
    result = runner.invoke(cli, ["certify", str(programs_dir / "p0.pl"), "-q", REV, "--stats"])
    assert result.exit_code == 0, result.output
    assert "rev(X,Y) : true => models([];[X,Y])" in result.output
    assert "certified 2 entries, 3 arcs" in result.output
    assert "traversals:" in result.output
    assert "# elapsed" in result.output


def test_addition_then_arbitrary_update(runner, programs_dir, producer, consumer):
    producer_state, _ = producer

    package, output = ship(runner, programs_dir, producer_state, "p0.pl", "p1.pl", "pkg1")
    assert "addition update" in output
    assert "incremental certificate: 0 entries, 0 bytes" in output
    assert "full certificate: 2 entries" in output
    result = runner.invoke(cli, ["inc-check", "--state", str(consumer), str(package)])
    assert result.exit_code == 0, result.output
    assert "0 entries changed, 1 entry rechecked" in result.output
    assert "state: 2 entries, 3 arcs" in result.output

    package, output = ship(runner, programs_dir, producer_state, "p1.pl", "p2.pl", "pkg2")
    assert "arbitrary update" in output
    assert "incremental certificate: 3 entries" in output
    assert "full certificate: 2 entries" in output
    result = runner.invoke(cli, ["inc-check", "--state", str(consumer), str(package), "--stats"])
    assert result.exit_code == 0, result.output
    assert "3 entries changed, 3 entries rechecked" in result.output
    assert "state: 2 entries, 3 arcs" in result.output
    assert "removed: 1" in result.output

    # both sides now hold the same tables
    for name in ("program.pl", "answers.cert", "deps.dat", "queries.q"):
        assert (producer_state / name).read_text() == (consumer / name).read_text()


def test_tampered_certificate_is_rejected(runner, programs_dir, producer):
    _, cert = producer
    text = cert.read_text().replace(
        "app(X,Y,Z) : true => models([];[X];[X,Y,Z];[Y])", "app(X,Y,Z) : true => models([X,Y,Z])"
    )
    cert.write_text(text)
    result = runner.invoke(cli, ["check", str(programs_dir / "p0.pl"), "--cert", str(cert), "-q", REV])
    assert result.exit_code == 1
    assert "app(X,Y,Z):true" in result.output


def test_syntax_error_exit_code(runner, tmp_path):
    program = tmp_path / "bad.pl"
    program.write_text("p(X) :- X = a.\np(X) :- X < 3.\n")
    result = runner.invoke(cli, ["certify", str(program), "-q", "p(X):true"])
    assert result.exit_code == 2
    assert "line 2" in result.output


def test_bad_query_is_a_usage_error(runner, programs_dir):
    result = runner.invoke(cli, ["certify", str(programs_dir / "p0.pl"), "-q", "rev(X,Y)"])
    assert result.exit_code == 2


def test_corrupt_state_exit_code(runner, programs_dir, producer, consumer):
    producer_state, _ = producer
    package, _ = ship(runner, programs_dir, producer_state, "p0.pl", "p1.pl", "pkg1")
    (consumer / "deps.dat").unlink()
    result = runner.invoke(cli, ["inc-check", "--state", str(consumer), str(package)])
    assert result.exit_code == 3
    assert "deps.dat" in result.output
    assert not (consumer / "lock").exists()


def test_locked_state_exit_code(runner, programs_dir, producer, consumer):
    producer_state, _ = producer
    package, _ = ship(runner, programs_dir, producer_state, "p0.pl", "p1.pl", "pkg1")
    (consumer / "lock").write_text("1\n")
    result = runner.invoke(cli, ["inc-check", "--state", str(consumer), str(package)])
    assert result.exit_code == 3
    assert "locked" in result.output


def test_rejected_update_leaves_state_untouched(runner, programs_dir, producer, consumer):
    producer_state, _ = producer
    ship(runner, programs_dir, producer_state, "p0.pl", "p1.pl", "pkg1")
    package, _ = ship(runner, programs_dir, producer_state, "p1.pl", "p2.pl", "pkg2")
    before = {name: (consumer / name).read_text() for name in ("program.pl", "answers.cert", "deps.dat")}
    # the consumer still holds P0, so the update does not apply
    result = runner.invoke(cli, ["inc-check", "--state", str(consumer), str(package)])
    assert result.exit_code == 2
    assert {name: (consumer / name).read_text() for name in before} == before


def test_trust(runner, programs_dir, producer):
    producer_state, _ = producer
    policy = programs_dir / "policy.txt"
    policy.write_text("app(X,Y,Z) : true => Z -> (X & Y)\n")
    result = runner.invoke(cli, ["trust", "--state", str(producer_state), "--policy", str(policy)])
    assert result.exit_code == 0, result.output
    assert "trusted (1 requirement)" in result.output

    policy.write_text("rev(X,Y) : true => X & Y\n")
    result = runner.invoke(cli, ["trust", "--state", str(producer_state), "--policy", str(policy)])
    assert result.exit_code == 1
    assert "untrusted" in result.output


def test_diff_to_stdout(runner, programs_dir):
    result = runner.invoke(cli, ["diff", str(programs_dir / "p1.pl"), str(programs_dir / "p2.pl")])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("@ app/3\n")
    assert "arbitrary update touching 1 predicate" in result.output


def test_undecodable_program_is_a_syntax_error(runner, tmp_path):
    program = tmp_path / "latin1.pl"
    program.write_bytes(b"p(X) :- X = a.\np(X) :- X = \xe9.\n")
    result = runner.invoke(cli, ["certify", str(program), "-q", "p(X):true"])
    assert result.exit_code == 2
    assert "line 2" in result.output
    assert result.exception is None or isinstance(result.exception, SystemExit)


def test_undecodable_state_file_exit_code(runner, programs_dir, producer):
    producer_state, _ = producer
    (producer_state / "answers.cert").write_bytes(b"rev(X,Y) : true => true\n\xff\xfe\n")
    policy = programs_dir / "policy.txt"
    policy.write_text("rev(X,Y) : true => true\n")
    result = runner.invoke(cli, ["trust", "--state", str(producer_state), "--policy", str(policy)])
    assert result.exit_code == 3
    assert "answers.cert" in result.output
