import logging
from typing import Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from ..schemas.certificate import AnswerEntry, CallPattern, Certificate, SafetyPolicy
from ..schemas.program import Program
from .analyzer import AnalysisResult, Analyzer
from .def_domain import DefDomain

logger = logging.getLogger(__name__)


class PolicyReport(BaseModel):
    """Verdict of the verification condition with its diagnostics"""
    model_config = ConfigDict(frozen=True)

    trusted: bool
    unmatched: Tuple[AnswerEntry, ...] = ()
    violations: Tuple[Tuple[AnswerEntry, AnswerEntry], ...] = ()

    def diagnostics(self) -> List[str]:
        lines = [f"no certified entry for required {required.call_pattern}" for required in self.unmatched]
        lines.extend(
            f"{certified.call_pattern}: certified {certified.answer} is not below required {required.answer}"
            for certified, required in self.violations
        )
        return lines


class Certifier:
    """Producer side: certificate generation and the safety policy check"""

    def __init__(self, domain: Optional[DefDomain] = None):
        self.domain = domain or DefDomain()
        self.analyzer = Analyzer(self.domain)

    def certify(self, program: Program, roots: Iterable[CallPattern]) -> AnalysisResult:
        """The analysis fixpoint for `roots`; its answers are the certificate"""
        result = self.analyzer.analyze(program, list(roots))
        logger.info("certificate with %d entries and %d arcs", len(result.answers), len(result.arcs))
        return result

    def vc_check(self, certificate: Certificate, policy: SafetyPolicy) -> PolicyReport:
        """
        Entrywise test of the certificate against the policy.

        A required entry is met when the certificate has an entry with the
        same call pattern whose answer is below the required one.
        """
        table = certificate.table
        unmatched: List[AnswerEntry] = []
        violations: List[Tuple[AnswerEntry, AnswerEntry]] = []
        for required in policy.required:
            certified = table.get(required.key)
            if certified is None:
                unmatched.append(required)
                continue
            answer = self.domain.relabel(certified.answer, required.atom.variables)
            if not self.domain.leq(answer, required.answer):
                violations.append((certified, required))
        trusted = not unmatched and not violations
        logger.info(
            "policy with %d requirements: %s", len(policy.required), "trusted" if trusted else "untrusted"
        )
        return PolicyReport(trusted=trusted, unmatched=tuple(unmatched), violations=tuple(violations))


_DEFAULT = Certifier()


def certify(program: Program, roots: Iterable[CallPattern]) -> AnalysisResult:
    return _DEFAULT.certify(program, roots)


def vc_check(certificate: Certificate, policy: SafetyPolicy) -> PolicyReport:
    return _DEFAULT.vc_check(certificate, policy)
