import pytest

from incacc.exceptions import ProgramSyntaxError
from incacc.schemas import Atom, Call, Constraint, Function, Variable
from incacc.services.program_parser import (
    ProgramParser,
    format_program,
    normalize,
    parse_program,
    rename_rule,
)

from conftest import P0_TEXT, P1_TEXT, P2_TEXT


def test_parse_p0_rules(p0):
    ids = [str(rule.id) for rule in p0.rules]
    assert ids == ["rev/2/1", "rev/2/2", "app/3/1", "app/3/2"]
    rev2 = p0.rules[1]
    assert [type(literal) for literal in rev2.body] == [Constraint, Call, Constraint, Call]
    assert rev2.body[1].atom == Atom.of("rev", "V", "W")
    assert rev2.body[3].atom == Atom.of("app", "W", "T", "Y")
    assert rev2.variables == ("X", "Y", "U", "V", "W", "T")


def test_parse_empty_program():
    assert parse_program("").rules == ()
    assert parse_program("% only a comment\n").rules == ()


def test_parse_single_constraint():
    program = parse_program("p(X) :- X = a.")
    assert len(program.rules) == 1
    assert program.rules[0].body == (Constraint(lhs=Variable(name="X"), rhs=Function(name="a")),)


def test_normalize_repeated_and_constant_head_arguments():
    assert format_program(parse_program("app([],Y,Y).")) == "app(X,Y,Z) :- X = [], Y = Z.\n"
    assert format_program(parse_program("p(a).")) == "p(X) :- X = a.\n"


def test_body_atoms_are_flattened():
    program = parse_program("p(X) :- q(X, X, f(Y)).")
    text = format_program(program)
    assert text == "p(X) :- X = G1, G2 = f(Y), q(X,G1,G2).\n"


def test_compound_equations_are_decomposed():
    program = parse_program("p(X,Y) :- f(X,Y) = f(a,g(Y)).")
    assert format_program(program) == "p(X,Y) :- X = a, Y = g(Y).\n"


def test_functor_clash_keeps_both_sides():
    program = parse_program("p :- f(a) = g(b).")
    assert format_program(program) == "p :- G1 = f(a), G1 = g(b).\n"


def test_true_and_anonymous_variables():
    program = parse_program("p(X) :- true, q(X, _, _).")
    call = program.rules[0].body[-1]
    assert isinstance(call, Call)
    names = call.atom.variables
    assert names[0] == "X" and len(set(names)) == 3


def test_heads_aligned_per_predicate():
    program = parse_program("p(A,B) :- A = B.\np(X,Y) :- q(X,A), Y = A.\n")
    first, second = program.rules
    assert first.head == second.head == Atom.of("p", "A", "B")
    # the body variable A of the second rule clashes with the head and is renamed
    assert "A1" in second.variables
    assert str(second.id) == "p/2/2"


def test_arithmetic_constraints_rejected_with_position():
    with pytest.raises(ProgramSyntaxError) as info:
        parse_program("p(X) :- true.\np(X) :- X < 3.\n")
    assert info.value.line == 2
    assert info.value.column is not None


def test_syntax_error_position():
    with pytest.raises(ProgramSyntaxError) as info:
        parse_program("p(X) :- X = a.\nq(X :- r.\n")
    assert info.value.line == 2


def test_variable_head_rejected():
    with pytest.raises(ProgramSyntaxError):
        parse_program("X :- p.")


@pytest.mark.parametrize("text", [P0_TEXT, P1_TEXT, P2_TEXT, "p(a, [b|T], f(_)).\nq :- p(X, X, X).\n"])
def test_normalize_is_idempotent_and_round_trips(text):
    program = parse_program(text)
    assert normalize(program) == program
    assert normalize(normalize(program)) == normalize(program)
    assert parse_program(format_program(program)) == program


def test_normalized_p0_unchanged(p0):
    assert parse_program(format_program(p0)) == p0
    assert normalize(p0) == p0


def test_lists_print_in_bracket_notation(p2):
    assert "Z = [a,a|W]" in format_program(p2)


def test_rename_rule_avoids_names(p0):
    app1 = p0.rules_for(("app", 3))[0]
    renamed = rename_rule(app1, {"X", "Y", "Z"})
    assert renamed.text() == "app(X1,Y1,Z1) :- X1 = [], Y1 = Z1."
    assert renamed.signature() == app1.signature()


def test_rename_rule_is_bijective(p0):
    parser = ProgramParser()
    rev2 = p0.rules_for(("rev", 2))[1]
    mapping = parser.renaming(rev2, set(rev2.variables))
    renamed = rev2.rename(mapping)
    assert not set(renamed.variables) & set(rev2.variables)
    inverse = {new: old for old, new in mapping.items()}
    assert renamed.rename(inverse) == rev2


def test_rename_rule_without_constraints_is_a_variant(p0):
    for rule in p0.rules:
        assert rename_rule(rule, set()).signature() == rule.signature()


def test_predicate_index_is_built_once(p0):
    assert p0.index is p0.index
    assert p0.predicates() == [("rev", 2), ("app", 3)]
    assert [rule.id.ordinal for rule in p0.rules_for(("rev", 2))] == [1, 2]
    assert p0.rules_for(("nope", 0)) == ()
    assert parse_program(P0_TEXT) == p0
