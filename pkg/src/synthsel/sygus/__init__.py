"""SyGuS-IF parsing, term representation, printing, and grammars."""

from .terms import (
    App,
    ArityError,
    BoolLit,
    BVLit,
    Candidate,
    FunctionSignature,
    IntLit,
    Ite,
    Sort,
    SortError,
    SygusError,
    Term,
    Var,
    BOOL,
    INT,
    apply_candidate,
    conjoin,
    free_variables,
    infer_sort,
    print_define_fun,
    print_term,
    subterms,
)
from .parser import (
    ParseError,
    SynthQuery,
    UnsupportedError,
    parse_define_fun,
    parse_query,
    parse_term_text,
    print_query,
    substitute_solution,
    tokenize,
)
from .grammar import (
    Grammar,
    GrammarError,
    Hole,
    Production,
    default_grammar,
    fill_holes,
    grammar_for_query,
    parse_user_grammar,
)

__all__ = [
    "App", "ArityError", "BoolLit", "BVLit", "Candidate", "FunctionSignature",
    "IntLit", "Ite", "Sort", "SortError", "SygusError", "Term", "Var", "BOOL",
    "INT", "apply_candidate", "conjoin", "free_variables", "infer_sort",
    "print_define_fun", "print_term", "subterms",
    "ParseError", "SynthQuery", "UnsupportedError", "parse_define_fun",
    "parse_query", "parse_term_text", "print_query", "substitute_solution",
    "tokenize",
    "Grammar", "GrammarError", "Hole", "Production", "default_grammar",
    "fill_holes", "grammar_for_query", "parse_user_grammar",
]
