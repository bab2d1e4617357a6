from .program import Atom, Call, Constraint, Function, Program, Rule, RuleId, Term, Variable
from .def_value import DefValue
from .certificate import (
    AnswerEntry,
    CallKey,
    CallPattern,
    Certificate,
    DependencyArc,
    IncrementalCertificate,
    SafetyPolicy,
)
from .update import Update, UpdateClass, UpdateTuple
from .state import ConsumerState

__all__ = [
    "Atom",
    "Call",
    "Constraint",
    "Function",
    "Program",
    "Rule",
    "RuleId",
    "Term",
    "Variable",
    "DefValue",
    "AnswerEntry",
    "CallKey",
    "CallPattern",
    "Certificate",
    "DependencyArc",
    "IncrementalCertificate",
    "SafetyPolicy",
    "Update",
    "UpdateClass",
    "UpdateTuple",
    "ConsumerState",
]
