from incacc.schemas import Certificate, SafetyPolicy
from incacc.services.certifier import Certifier, certify, vc_check
from incacc.services.def_domain import DefDomain
from incacc.services.formula_parser import parse_entry
from incacc.store.codec import parse_policy


def test_certify_p0(p0, rev_query, entries, arcs):
    result = certify(p0, [rev_query])
    assert result.answers == Certificate.of([entries["A1"], entries["A2"]])
    # canonical order: by head predicate, rule, then literal
    assert result.arcs == (arcs["D3"], arcs["D1"], arcs["D2"])


def test_certify_p1_matches_p0(p0, p1, rev_query):
    # the added append rules do not change any answer
    assert certify(p1, [rev_query]).answers == certify(p0, [rev_query]).answers


def test_certify_p2(p2, rev_query, entries):
    result = certify(p2, [rev_query])
    assert result.answers == Certificate.of([entries["NA1"], entries["NA3"]])


def test_policy_implied_by_certificate_is_trusted(p0, rev_query):
    cert = certify(p0, [rev_query]).answers
    policy = parse_policy("app(X,Y,Z) : true => Z -> (X & Y)\n")
    report = vc_check(cert, policy)
    assert report.trusted
    assert report.diagnostics() == []


def test_policy_with_renamed_atom(p0, rev_query):
    cert = certify(p0, [rev_query]).answers
    policy = parse_policy("rev(A,B) : true => A -> B\n")
    assert vc_check(cert, policy).trusted


def test_policy_stronger_than_certificate_is_untrusted(p0, rev_query, entries):
    cert = certify(p0, [rev_query]).answers
    policy = SafetyPolicy(required=(parse_entry("rev(X,Y) : true => X & Y"),))
    report = vc_check(cert, policy)
    assert not report.trusted
    assert report.violations == ((entries["A1"], policy.required[0]),)
    assert "is not below required" in report.diagnostics()[0]


def test_policy_on_unanalyzed_call_is_untrusted(p0, rev_query):
    cert = certify(p0, [rev_query]).answers
    policy = parse_policy("app(X,Y,Z) : X => true\n")
    report = vc_check(cert, policy)
    assert not report.trusted
    assert len(report.unmatched) == 1
    assert report.diagnostics() == ["no certified entry for required app(X,Y,Z):models([X];[X,Y];[X,Y,Z];[X,Z])"]


def test_certificate_is_its_own_policy(p0, p1, p2, rev_query):
    certifier = Certifier()
    for program in (p0, p1, p2):
        cert = certifier.certify(program, [rev_query]).answers
        assert certifier.vc_check(cert, SafetyPolicy(required=cert.entries)).trusted


def test_policy_check_is_monotone(p0, rev_query):
    """Weakening every required answer keeps a trusted policy trusted"""
    domain = DefDomain()
    cert = certify(p0, [rev_query]).answers
    weakened = SafetyPolicy(
        required=tuple(
            entry.model_copy(update={"answer": domain.top(entry.atom.variables)}) for entry in cert.entries
        )
    )
    assert vc_check(cert, weakened).trusted


def test_empty_policy_is_trusted(p0, rev_query):
    assert vc_check(certify(p0, [rev_query]).answers, SafetyPolicy()).trusted
