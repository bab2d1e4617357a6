from .def_domain import DefDomain
from .program_parser import ProgramParser
from .formula_parser import FormulaParser
from .analyzer import AnalysisResult, Analyzer
from .certifier import Certifier, PolicyReport
from .checker import Checker, CheckResult, LayeredAnswers
from .update_manager import UpdateManager
from .incremental_checker import IncCheckResult, IncrementalChecker
from .incremental_certifier import ExtCertResult, IncrementalCertifier

__all__ = [
    "DefDomain",
    "ProgramParser",
    "FormulaParser",
    "AnalysisResult",
    "Analyzer",
    "Certifier",
    "PolicyReport",
    "Checker",
    "CheckResult",
    "LayeredAnswers",
    "UpdateManager",
    "IncCheckResult",
    "IncrementalChecker",
    "ExtCertResult",
    "IncrementalCertifier",
]
