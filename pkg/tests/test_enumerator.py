import math
import random
import time

import pytest

from synthsel.enumerator import (
    EnumeratorConfig,
    PartialProgram,
    SearchStatus,
    astar_synthesize,
    cegis_solve,
    edge_cost,
    heuristic,
    initial_example,
    min_completion_costs,
)
from synthsel.sygus import (
    Var,
    grammar_for_query,
    parse_query,
    substitute_solution,
)
from synthsel.verify import Verifier, evaluate

from conftest import random_small_grammar


def _deadline(seconds: float) -> float:
    return time.monotonic() + seconds


# ---------------------------------------------------------------------------
# edge costs and the heuristic
# ---------------------------------------------------------------------------

def test_edge_cost_counts_productions(max3_query):
    g = grammar_for_query(max3_query)
    assert edge_cost("I", g) == 9
    assert edge_cost("B", g) == 6
    assert edge_cost("I", g, scale=2.0) == 18
    with pytest.raises(KeyError):
        edge_cost("Z", g)


def test_min_completion_costs_lia(max3_query):
    g = grammar_for_query(max3_query)
    mc = min_completion_costs(g)
    assert mc == {"I": 9.0, "B": 24.0}  # B -> rel of two leaf Is


def test_heuristic_complete_is_zero(max3_query):
    g = grammar_for_query(max3_query)
    assert heuristic(PartialProgram((0,), (), 9.0), g) == 0.0


def test_heuristic_single_pending(max3_query):
    g = grammar_for_query(max3_query)
    assert heuristic(PartialProgram((), ("I",), 0.0), g) == 9.0
    assert heuristic(PartialProgram((), ("B", "I"), 0.0), g) == 33.0


def test_single_production_grammar_costs():
    rng = random.Random(0)
    from synthsel.sygus import Grammar, IntLit, INT
    from synthsel.sygus.grammar import Production

    g = Grammar(start="N", sorts={"N": INT},
                productions={"N": (Production("N", IntLit(7)),)})
    assert edge_cost("N", g) == 1
    assert min_completion_costs(g) == {"N": 1.0}


def _brute_min_completion(grammar, nt, depth, scale=1.0, _memo=None):
    """Minimal derivation cost over derivations of bounded depth, computed by
    exhaustive expansion (memoized on (nt, depth) to stay affordable)."""
    if _memo is None:
        _memo = {}
    if depth <= 0:
        return math.inf
    key = (nt, depth)
    if key in _memo:
        return _memo[key]
    best = math.inf
    base = edge_cost(nt, grammar, scale)
    for p in grammar.productions[nt]:
        total = base
        for h in p.holes:
            total += _brute_min_completion(grammar, h, depth - 1, scale, _memo)
        best = min(best, total)
    _memo[key] = best
    return best


def test_mc_matches_bruteforce_on_default_grammar(max3_query):
    g = grammar_for_query(max3_query)
    mc = min_completion_costs(g)
    for nt in g.productions:
        assert mc[nt] == _brute_min_completion(g, nt, 3)


def test_heuristic_admissible_on_random_grammars():
    rng = random.Random(2024)
    for _ in range(20):
        g = random_small_grammar(rng)
        mc = min_completion_costs(g)
        # every partial reachable in <= 3 leftmost expansions
        frontier = [PartialProgram((), (g.start,), 0.0)]
        for _ in range(3):
            nxt = []
            for state in frontier:
                if not state.pending:
                    continue
                nt = state.pending[0]
                for i, p in enumerate(g.productions[nt]):
                    nxt.append(PartialProgram(
                        state.choices + (i,),
                        p.holes + state.pending[1:],
                        state.cost + edge_cost(nt, g)))
            frontier = nxt
            for state in frontier:
                h = heuristic(state, g, mc)
                true_min = sum(_brute_min_completion(g, nt, 8)
                               for nt in state.pending)
                assert h <= true_min + 1e-9


# ---------------------------------------------------------------------------
# A* synthesis
# ---------------------------------------------------------------------------

def test_astar_empty_examples_returns_cheapest(max2_query):
    g = grammar_for_query(max2_query)
    res = astar_synthesize(g, [], max2_query, _deadline(10))
    assert res.status is SearchStatus.SOLVED
    # cheapest complete derivation is a lone leaf; FIFO ties pick the first
    # production, which is the first parameter
    assert res.candidate.body == Var("v0")


def test_astar_consistent_with_examples(max2_query):
    g = grammar_for_query(max2_query)
    examples = [{"v0": 0, "v1": 1}, {"v0": 1, "v1": 0}, {"v0": 2, "v1": 2}]
    res = astar_synthesize(g, examples, max2_query, _deadline(30))
    assert res.status is SearchStatus.SOLVED
    phi = substitute_solution(max2_query, res.candidate)
    for ex in examples:
        assert evaluate(phi, ex) is True


def test_astar_zero_deadline_times_out(max2_query):
    g = grammar_for_query(max2_query)
    res = astar_synthesize(g, [], max2_query, time.monotonic() - 1.0)
    assert res.status is SearchStatus.TIMEOUT


def test_astar_finite_grammar_exhausts():
    text = """(set-logic LIA)
(synth-fun f ((x Int)) Int ((I Int)) ((I Int (0))))
(declare-var x Int)
(constraint (= (f x) 1))
(check-synth)
"""
    q = parse_query(text)
    g = grammar_for_query(q)
    res = astar_synthesize(g, [{"x": 0}], q, _deadline(5))
    assert res.status is SearchStatus.EXHAUSTED


def test_astar_frontier_cap_times_out(max3_query):
    g = grammar_for_query(max3_query)
    config = EnumeratorConfig(max_frontier=1000)
    # examples that rule out every cheap candidate force a deep search,
    # so the frontier cap must convert it into a timeout
    examples = [
        {"v0": 0, "v1": 0, "v2": 0},
        {"v0": 5, "v1": 1, "v2": 1},
        {"v0": 1, "v1": 5, "v2": 1},
        {"v0": 1, "v1": 1, "v2": 5},
        {"v0": 2, "v1": 3, "v2": 9},
    ]
    res = astar_synthesize(g, examples, max3_query, _deadline(30), config)
    assert res.status is SearchStatus.TIMEOUT


# ---------------------------------------------------------------------------
# CEGIS
# ---------------------------------------------------------------------------

def test_initial_example_all_zeros(max3_query):
    assert initial_example(max3_query) == {"v0": 0, "v1": 0, "v2": 0}


def test_cegis_solves_max2(max2_query):
    g = grammar_for_query(max2_query)
    verifier = Verifier()
    res = cegis_solve(max2_query, g, _deadline(100), verifier)
    assert res.status is SearchStatus.SOLVED
    assert verifier.check(max2_query, res.candidate).is_valid


def test_cegis_empty_constraints_returns_first_program():
    q = parse_query("""(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(check-synth)
""")
    g = grammar_for_query(q)
    res = cegis_solve(q, g, _deadline(10), Verifier())
    assert res.status is SearchStatus.SOLVED
    assert res.iterations == 1
    assert len(res.counterexamples) == 1  # only the seed example


def test_cegis_unsatisfiable_grammar_never_wrong():
    text = """(set-logic LIA)
(synth-fun f ((x Int)) Int ((I Int)) ((I Int (0))))
(declare-var x Int)
(constraint (= (f x) 1))
(check-synth)
"""
    q = parse_query(text)
    g = grammar_for_query(q)
    res = cegis_solve(q, g, _deadline(10), Verifier())
    assert res.status in (SearchStatus.EXHAUSTED, SearchStatus.TIMEOUT)
    assert res.candidate is None


def test_cegis_deadline_respected(max3_query):
    g = grammar_for_query(max3_query)
    start = time.monotonic()
    res = cegis_solve(max3_query, g, start + 1.5, Verifier())
    elapsed = time.monotonic() - start
    assert res.status is SearchStatus.TIMEOUT
    assert elapsed < 4.0  # deadline plus bounded overshoot
