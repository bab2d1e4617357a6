from typing import Dict

import pytest

from incacc.schemas import AnswerEntry, CallPattern, Certificate, ConsumerState, DependencyArc, Program
from incacc.services.formula_parser import parse_arc, parse_entry, parse_query
from incacc.services.program_parser import parse_program

# Naive reverse with the standard append
P0_TEXT = """\
% naive reversal of a list
rev(X,Y) :- X = [], Y = [].
rev(X,Y) :- X = [U|V], rev(V,W), T = [U], app(W,T,Y).
app(X,Y,Z) :- X = [], Y = Z.
app(X,Y,Z) :- X = [U|V], Z = [U|W], app(V,Y,W).
"""

# Two specialised append rules added after the recursive one
P1_TEXT = P0_TEXT + """\
app(X,Y,Z) :- X = [U], Z = [U|Y].
app(X,Y,Z) :- X = [U,V], Z = [U,V|Y].
"""

# append replaced by a version for lists of a's of the same length
P2_TEXT = """\
rev(X,Y) :- X = [], Y = [].
rev(X,Y) :- X = [U|V], rev(V,W), T = [U], app(W,T,Y).
app(X,Y,Z) :- X = [], Y = [], Z = [].
app(X,Y,Z) :- X = [a|V], Y = [a|U], Z = [a,a|W], app(V,U,W).
"""

ENTRIES = {
    "A1": "rev(X,Y) : true => X <-> Y",
    "A2": "app(X,Y,Z) : true => (X & Y) <-> Z",
    "NA1": "rev(X,Y) : true => X & Y",
    "NA2": "app(X,Y,Z) : true => X & Y & Z",
    "NA3": "app(X,Y,Z) : X => X & Y & Z",
}

ARCS = {
    "D1": "rev(X,Y):true => rev/2/2#2 rev(V,W):true",
    "D2": "rev(X,Y):true => rev/2/2#4 app(W,T,Y):true",
    "D3": "app(X,Y,Z):true => app/3/2#3 app(V,Y,W):true",
    "ND1": "rev(X,Y):true => rev/2/2#2 rev(V,W):true",
    "ND2": "rev(X,Y):true => rev/2/2#4 app(W,T,Y):W",
    "ND3": "app(X,Y,Z):X => app/3/2#4 app(V,U,W):V",
    "ND_TOP": "app(X,Y,Z):true => app/3/2#4 app(V,U,W):true",
}


@pytest.fixture
def p0() -> Program:
    return parse_program(P0_TEXT)


@pytest.fixture
def p1() -> Program:
    return parse_program(P1_TEXT)


@pytest.fixture
def p2() -> Program:
    return parse_program(P2_TEXT)


@pytest.fixture
def entries() -> Dict[str, AnswerEntry]:
    return {name: parse_entry(text) for name, text in ENTRIES.items()}


@pytest.fixture
def arcs() -> Dict[str, DependencyArc]:
    return {name: parse_arc(text) for name, text in ARCS.items()}


@pytest.fixture
def rev_query() -> CallPattern:
    return parse_query("rev(X,Y) : true")


@pytest.fixture
def app_query() -> CallPattern:
    return parse_query("app(X,Y,Z) : true")


@pytest.fixture
def p0_state(p0, entries, arcs, rev_query) -> ConsumerState:
    """Consumer state after checking the certificate of P0"""
    return ConsumerState(
        program=p0,
        answers=Certificate.of([entries["A1"], entries["A2"]]),
        arcs=(arcs["D1"], arcs["D2"], arcs["D3"]),
        queries=(rev_query,),
    )


@pytest.fixture
def p1_state(p1, p0_state) -> ConsumerState:
    return p0_state.model_copy(update={"program": p1})


@pytest.fixture
def programs_dir(tmp_path):
    """P0, P1 and P2 written to files"""
    for name, text in (("p0.pl", P0_TEXT), ("p1.pl", P1_TEXT), ("p2.pl", P2_TEXT)):
        (tmp_path / name).write_text(text)
    return tmp_path
