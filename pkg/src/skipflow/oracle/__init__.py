"""Concrete execution, program generation and soundness checking."""

from .check import Violation, check_subsumption
from .fuzz import FuzzReport, check_program, run_fuzz
from .gen import gen_program
from .interp import NULL_REF, ConcreteValue, Int, Interpreter, NullRef, Ref, Trace, abstract, interpret

__all__ = [
    "NULL_REF", "ConcreteValue", "FuzzReport", "Int", "Interpreter", "NullRef", "Ref", "Trace",
    "Violation", "abstract", "check_program", "check_subsumption", "gen_program", "interpret", "run_fuzz",
]
