"""Exact inference and decoder bias measurement for constrained autoregressive models."""

from .armodel import MarkovModel, Vocabulary, load_markov, sequence_probability, uniform_iid
from .constraints import (ConstraintAutomaton, FixedLengthConstraint, InpaintingSpec, MetricalConstraint,
                          UnaryConstraint, accepts, compile_constraint, parse_constraint)
from .dynprog import ContinuationTable, exact_constrained_sample, exact_z, viterbi_map
from .gadget import build_gadget, parse_dimacs

__version__ = "0.1.0"

__all__ = [
    "ConstraintAutomaton", "ContinuationTable", "FixedLengthConstraint", "InpaintingSpec", "MarkovModel",
    "MetricalConstraint", "UnaryConstraint", "Vocabulary", "accepts", "build_gadget", "compile_constraint",
    "exact_constrained_sample", "exact_z", "load_markov", "parse_constraint", "parse_dimacs",
    "sequence_probability", "uniform_iid", "viterbi_map",
]
