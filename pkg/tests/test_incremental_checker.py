import logging

import pytest

from incacc.exceptions import InvalidAnswer, MissingEntry, NotAFixpoint, PatchConflict
from incacc.schemas import Certificate, ConsumerState, IncrementalCertificate, UpdateClass
from incacc.services.analyzer import analyze
from incacc.services.formula_parser import parse_arc, parse_entry, parse_query
from incacc.services.incremental_checker import IncrementalChecker, inc_check, remove_unreachable
from incacc.services.program_parser import parse_program
from incacc.services.update_manager import diff
from incacc.store.codec import parse_update


def test_addition_rechecks_only_append(p0, p1, p0_state):
    result = inc_check(p0_state, diff(p1, p0), IncrementalCertificate(), strict=True)
    assert result.update_class == UpdateClass.ADDITION
    assert result.rechecked == 1
    assert result.changed == 0
    # the four append rules of the new program, each traversed once
    assert result.traversals == 4
    assert result.state.program == p1
    assert result.state.answers == p0_state.answers
    assert result.state.arcs == p0_state.arcs


def test_arbitrary_update_replaces_the_tables(p1, p2, p1_state, entries, arcs):
    inc = IncrementalCertificate.of([entries["NA1"], entries["NA2"], entries["NA3"]])
    result = inc_check(p1_state, diff(p2, p1), inc, strict=True)
    assert result.update_class == UpdateClass.ARBITRARY
    assert result.state.program == p2
    assert result.state.answers == Certificate.of([entries["NA1"], entries["NA3"]])
    assert set(result.state.arcs) == {arcs["ND1"], arcs["ND2"], arcs["ND3"]}
    assert result.rechecked == 3
    assert result.changed == 3
    assert result.removed == 1


def test_missing_incremental_entry(p1, p2, p1_state, entries):
    inc = IncrementalCertificate.of([entries["NA1"], entries["NA2"]])
    with pytest.raises(MissingEntry) as info:
        inc_check(p1_state, diff(p2, p1), inc)
    assert info.value.call.key == parse_query("app(X,Y,Z) : X").key
    assert str(info.value.call.atom) == "app(X,Y,Z)"


def test_held_answers_stay_valid_without_claims(p1, p2, p1_state, entries, arcs):
    # the old append answer is a safe, if imprecise, answer for the new rules
    result = inc_check(p1_state, diff(p2, p1), IncrementalCertificate(), strict=True)
    assert result.rechecked == 1
    assert result.changed == 0
    assert result.state.answers == Certificate.of([entries["A1"], entries["A2"]])
    assert set(result.state.arcs) == {arcs["D1"], arcs["D2"], arcs["ND_TOP"]}


def test_tampered_incremental_entry_is_rejected(p1, p2, p1_state, entries):
    tampered = parse_entry("app(X,Y,Z) : X => X & Y")
    inc = IncrementalCertificate.of([entries["NA1"], entries["NA2"], tampered])
    with pytest.raises(InvalidAnswer):
        inc_check(p1_state, diff(p2, p1), inc)


def test_weakened_claim_strict_and_lenient(p1, p2, p1_state, entries):
    weaker = parse_entry("rev(X,Y) : true => X -> Y")
    inc = IncrementalCertificate.of([weaker, entries["NA2"], entries["NA3"]])
    with pytest.raises(NotAFixpoint):
        inc_check(p1_state, diff(p2, p1), inc, strict=True)
    result = inc_check(p1_state, diff(p2, p1), inc, strict=False)
    assert weaker in result.state.answers.entries


def test_empty_update_keeps_the_state(p0_state):
    result = inc_check(p0_state, diff(p0_state.program, p0_state.program), IncrementalCertificate())
    assert result.update_class == UpdateClass.EMPTY
    assert result.rechecked == 0
    assert result.traversals == 0
    assert result.state == p0_state


def test_deletion_with_empty_certificate_keeps_held_answers(p0, p1, p1_state):
    result = inc_check(p1_state, diff(p0, p1), IncrementalCertificate(), strict=True)
    assert result.update_class == UpdateClass.DELETION
    assert result.state.program == p0
    assert result.state.answers == p1_state.answers
    assert result.changed == 0


def test_deletion_leaves_safe_but_imprecise_answers():
    old = parse_program("p(X) :- X = a.\np(X) :- q(X).\nq(X).\n")
    new = parse_program("p(X) :- X = a.\n")
    roots = [parse_query("p(X) : true")]
    before = analyze(old, roots)
    state = ConsumerState(program=old, answers=before.answers, arcs=before.arcs, queries=roots)
    result = inc_check(state, diff(new, old), IncrementalCertificate(), strict=True)
    # p is now always ground, the held answer `true` stays as a safe claim
    (entry,) = [e for e in result.state.answers.entries if e.atom.predicate == "p"]
    assert entry.answer.is_top
    # q is no longer called and its entry is dropped
    assert [e.atom.predicate for e in result.state.answers.entries] == ["p"]
    assert result.state.arcs == ()


def test_conflicting_update_is_rejected_before_checking(p0_state):
    update = parse_update("@ app/3\n- app(X,Y,Z) :- X = [U], Z = [U|Y].\n")
    with pytest.raises(PatchConflict):
        inc_check(p0_state, update, IncrementalCertificate())


def test_state_is_not_mutated(p1, p2, p1_state, entries):
    before = p1_state.model_copy(deep=True)
    inc = IncrementalCertificate.of([entries["NA1"], entries["NA2"], entries["NA3"]])
    inc_check(p1_state, diff(p2, p1), inc)
    assert p1_state == before


def test_unconsumed_claims_are_rechecked(p0, p1, p0_state, entries, caplog):
    # a claim shipped for an entry the consumer holds but the update never reaches
    stale = parse_entry("rev(X,Y) : true => bot")
    inc = IncrementalCertificate.of([stale])
    with caplog.at_level(logging.WARNING, logger="incacc.services.incremental_checker"):
        with pytest.raises(InvalidAnswer) as info:
            IncrementalChecker().inc_check(p0_state, diff(p1, p0), inc)
    assert info.value.call.key == stale.key
    assert "never rechecked" in caplog.text


def test_remove_unreachable_examples(entries, arcs):
    answers = Certificate.of([entries["NA1"], entries["NA2"], entries["NA3"]])
    all_arcs = [arcs["ND1"], arcs["ND2"], arcs["ND3"], arcs["ND_TOP"]]
    kept, kept_arcs = remove_unreachable(answers, all_arcs, [parse_query("rev(X,Y) : true")])
    assert kept == Certificate.of([entries["NA1"], entries["NA3"]])
    assert set(kept_arcs) == {arcs["ND1"], arcs["ND2"], arcs["ND3"]}

    kept, kept_arcs = remove_unreachable(answers, all_arcs, [parse_query("app(X,Y,Z) : true")])
    assert kept == Certificate.of([entries["NA2"]])
    assert kept_arcs == (arcs["ND_TOP"],)


def test_remove_unreachable_cascades():
    answers = Certificate.of(
        [
            parse_entry("p(X) : true => true"),
            parse_entry("q(X) : true => true"),
            parse_entry("r(X) : true => true"),
        ]
    )
    chain = [
        parse_arc("q(X):true => q/1/1#1 r(X):true"),
    ]
    kept, kept_arcs = remove_unreachable(answers, chain, [parse_query("p(X) : true")])
    # q is unreachable from p, so r, only reachable through q, goes too
    assert kept.keys() == [parse_query("p(X) : true").key]
    assert kept_arcs == ()


def test_remove_unreachable_ignores_roots_without_entries(entries, arcs):
    answers = Certificate.of([entries["NA2"]])
    kept, kept_arcs = remove_unreachable(answers, [arcs["ND_TOP"]], [parse_query("rev(X,Y) : true")])
    assert len(kept) == 0
    assert kept_arcs == ()
