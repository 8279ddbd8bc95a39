"""Regular graph grammars over trees, series-parallel graphs and tree-width 2 graphs.

The package builds finite recognizer algebras from grammars and uses them to
decide membership, emptiness, inclusion and equivalence. Every construction can
be cross-checked against the bounded enumeration oracle in ``grammar``.
"""

from twograph.config import OracleConfig, DecisionConfig
from twograph.graph_core import ClassId, Edge, Graph, Term, eval_term, isomorphic
from twograph.grammar import Grammar, Nonterminal, enumerate_language, normalize, universal_grammar
from twograph.recognizer import Recognizer, build_recognizer, eval_profile
from twograph.decision import equivalent, filter_grammar, includes, is_empty, member, refine

__all__ = [
    "ClassId",
    "DecisionConfig",
    "Edge",
    "Grammar",
    "Graph",
    "Nonterminal",
    "OracleConfig",
    "Recognizer",
    "Term",
    "build_recognizer",
    "enumerate_language",
    "equivalent",
    "eval_profile",
    "eval_term",
    "filter_grammar",
    "includes",
    "is_empty",
    "isomorphic",
    "member",
    "normalize",
    "refine",
    "universal_grammar",
]
