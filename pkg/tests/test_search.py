import pytest

from oracle import count_solutions, satisfiable
from macsolver.heuristics import ProbeConfig, VOHeuristic
from macsolver.instances import gen_langford, gen_model_d, gen_queens
from macsolver.model import Constraint, DomainStore, Problem, check_tuple
from macsolver.search import (
    ArithmeticRestarts,
    GeometricRestarts,
    SearchConfig,
    next_cutoff,
    order_values,
    parse_restarts,
    restarts_name,
    solve,
)


def pred(cid, scope, name, k=None):
    return Constraint(id=cid, scope=scope, kind="predicate", pred=name, k=k)


class Stats:
    checks = 0


def assert_valid(problem, assignment):
    assert set(assignment) == set(problem.variables)
    for c in problem.constraints:
        assert check_tuple(c, tuple(assignment[v] for v in c.scope), Stats)


def test_geometric_schedule():
    g = GeometricRestarts(base=10, factor=1.5)
    assert [next_cutoff(g, k) for k in range(5)] == [10, 15, 22, 33, 50]


def test_arithmetic_schedule():
    a = ArithmeticRestarts(base=10, step=10)
    assert [next_cutoff(a, k) for k in range(3)] == [10, 20, 30]


def test_no_restarts_schedule():
    assert next_cutoff(None, 0) is None
    assert next_cutoff(None, 7) is None
    with pytest.raises(TypeError):
        next_cutoff("geo", 0)


def test_restart_validation():
    with pytest.raises(ValueError):
        GeometricRestarts(base=0)
    with pytest.raises(ValueError):
        GeometricRestarts(factor=1.0)
    with pytest.raises(ValueError):
        ArithmeticRestarts(base=0)
    with pytest.raises(ValueError):
        ArithmeticRestarts(step=0)


def test_parse_restarts():
    assert parse_restarts("none") is None
    assert parse_restarts("geo:10:1.5") == GeometricRestarts(10, 1.5)
    assert parse_restarts("arith:5:7") == ArithmeticRestarts(5, 7)
    with pytest.raises(ValueError):
        parse_restarts("geo:10")
    with pytest.raises(ValueError):
        parse_restarts("bogus:1:2")


def test_restarts_name_roundtrip():
    for policy in (None, GeometricRestarts(10, 1.5), GeometricRestarts(8, 2.0),
                   ArithmeticRestarts(5, 7)):
        assert parse_restarts(restarts_name(policy)) == policy


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(scheme="arc", policy="v_wdeg")
    with pytest.raises(ValueError):
        SearchConfig(value_order="sorted")
    with pytest.raises(ValueError):
        SearchConfig(mode="all")
    with pytest.raises(ValueError):
        SearchConfig(timeout=0)


def test_order_values_lex():
    p = Problem(
        name="p",
        variables=("x", "y"),
        domains={"x": (3, 1, 2), "y": (0, 1)},
        constraints=(pred("c", ("x", "y"), "ne"),),
    )
    d = DomainStore(p)
    assert order_values("x", d, "lex", seed=0) == [1, 2, 3]


def test_order_values_rand_deterministic():
    p = Problem(
        name="p",
        variables=("x", "y"),
        domains={"x": tuple(range(12)), "y": (0, 1)},
        constraints=(pred("c", ("x", "y"), "ne"),),
    )
    d = DomainStore(p)
    a = order_values("x", d, "rand", seed=5, index=0)
    b = order_values("x", d, "rand", seed=5, index=0)
    assert a == b
    assert sorted(a) == list(range(12))
    assert order_values("x", d, "rand", seed=6, index=0) != a  # seed matters


def chain_problem():
    return Problem(
        name="chain",
        variables=("x", "y", "z"),
        domains={"x": (1, 2, 3), "y": (1, 2, 3), "z": (1, 2, 3)},
        constraints=(pred("cxy", ("x", "y"), "lt"), pred("cyz", ("y", "z"), "lt")),
    )


def test_solve_first_returns_verified_solution():
    p = chain_problem()
    out = solve(p, SearchConfig())
    assert out.result == "sat"
    assert_valid(p, out.solution)
    assert out.solution == {"x": 1, "y": 2, "z": 3}  # the only solution


def test_solve_unsat_at_preprocessing():
    p = Problem(
        name="hopeless",
        variables=("x", "y"),
        domains={"x": (0, 1), "y": (2, 3)},
        constraints=(pred("c", ("x", "y"), "gt"),),
    )
    out = solve(p, SearchConfig())
    assert out.result == "unsat"
    assert out.stats.nodes == 0  # no branching was needed
    assert out.stats.dwos == 1


def test_count_mode_queens():
    for n, want in ((4, 2), (5, 10), (6, 4)):
        p = gen_queens(n)
        out = solve(p, SearchConfig(mode="count"))
        assert out.result == "sat"
        assert out.count == want
        assert out.count == count_solutions(p)


def test_langford_small():
    p = gen_langford(2, 3)
    out = solve(p, SearchConfig())
    assert out.result == "sat"
    assert_valid(p, out.solution)
    assert solve(gen_langford(2, 5), SearchConfig(mode="decide")).result == "unsat"


def test_determinism_same_config():
    p = gen_model_d(n=9, d=4, e=16, t=0.5, seed=8)
    cfg = SearchConfig(
        heuristic=VOHeuristic(base="dom/wdeg"),
        scheme="variable",
        policy="v_dom/wdeg",
        value_order="rand",
        seed=11,
        mode="count",
    )
    runs = []
    for _ in range(2):
        out = solve(p, cfg)
        s = out.stats
        runs.append((out.result, out.count, s.nodes, s.checks, s.revisions, s.dwos))
    assert runs[0] == runs[1]


def test_count_agrees_across_configs():
    p = gen_model_d(n=8, d=3, e=13, t=0.45, seed=2)
    want = count_solutions(p)
    outs = [
        solve(p, SearchConfig(heuristic=VOHeuristic(base=b), scheme=s, policy=pol,
                              mode="count"))
        for b, s, pol in (
            ("dom", "variable", "fifo"),
            ("dom/wdeg", "arc", "a_dom/wdeg"),
            ("impact", "variable", "v_dom/wdeg"),
            ("fully", "constraint", "c_wcon"),
        )
    ]
    assert all(o.count == want for o in outs)
    assert all(o.result == ("sat" if want else "unsat") for o in outs)


def test_restarts_fire_and_preserve_correctness():
    p = gen_langford(2, 5)  # unsat, needs real search
    cfg = SearchConfig(
        heuristic=VOHeuristic(base="dom/wdeg"),
        restarts=ArithmeticRestarts(base=1, step=1),
        mode="decide",
    )
    out = solve(p, cfg)
    assert out.result == "unsat"
    assert out.stats.restarts > 0
    # conflict weights persisted across restarts
    assert sum(out.weights.snapshot().values()) > len(p.constraints)


def test_count_mode_ignores_restarts():
    p = gen_queens(5)
    cfg = SearchConfig(restarts=ArithmeticRestarts(base=1, step=1), mode="count")
    out = solve(p, cfg)
    assert out.count == 10
    assert out.stats.restarts == 0


def test_timeout():
    p = gen_langford(2, 7)
    out = solve(p, SearchConfig(timeout=1e-6))
    assert out.result == "timeout"
    assert out.stats.time_ms >= 0.0


def test_default_weight_store_always_maintained(monkeypatch):
    import macsolver.search as search_mod

    created = []
    real = search_mod.WeightStore

    def counting(problem, policy="wdeg"):
        ws = real(problem, policy)
        created.append(policy)
        return ws

    monkeypatch.setattr(search_mod, "WeightStore", counting)
    p = gen_langford(2, 4)
    out = solve(p, SearchConfig(heuristic=VOHeuristic(base="dom"), mode="decide"))
    assert created == ["wdeg"]  # one store per solve, default policy
    assert out.result == "sat"
    # dom is not conflict-driven, yet the store tracked the run's conflicts
    assert sum(out.weights.snapshot().values()) >= len(p.constraints)


def test_weight_policy_follows_base():
    import macsolver.search as search_mod

    p = gen_langford(2, 3)
    for base, policy in (("alldel", "alldel"), ("fully", "fully"), ("wdeg", "wdeg")):
        out = solve(p, SearchConfig(heuristic=VOHeuristic(base=base)))
        assert out.weights.policy == policy


def test_probing_phase_definitive_unsat():
    p = Problem(
        name="triangle",
        variables=("x", "y", "z"),
        domains={"x": (0, 1), "y": (0, 1), "z": (0, 1)},
        constraints=(
            pred("c1", ("x", "y"), "ne"),
            pred("c2", ("x", "z"), "ne"),
            pred("c3", ("y", "z"), "ne"),
        ),
    )
    h = VOHeuristic(base="dom/wdeg", probing=ProbeConfig(failures=40, runs=3, seed=0))
    out = solve(p, SearchConfig(heuristic=h, mode="decide"))
    assert out.result == "unsat"


def test_probing_phase_definitive_sat_is_verified():
    p = gen_queens(5)
    h = VOHeuristic(base="dom/wdeg", probing=ProbeConfig(failures=40, runs=50, seed=1))
    out = solve(p, SearchConfig(heuristic=h))
    assert out.result == "sat"
    assert_valid(p, out.solution)


def test_probing_in_count_mode_still_counts_everything():
    p = gen_queens(4)
    h = VOHeuristic(base="dom/wdeg", probing=ProbeConfig(failures=10, runs=5, seed=3))
    out = solve(p, SearchConfig(heuristic=h, mode="count"))
    assert out.count == 2


def test_impact_base_solves():
    p = gen_queens(5)
    out = solve(p, SearchConfig(heuristic=VOHeuristic(base="impact"), mode="count"))
    assert out.count == 10


def test_impact_init_detects_inconsistency():
    # arc consistent but impossible: x = y and x != y
    p = Problem(
        name="impossible",
        variables=("x", "y"),
        domains={"x": (0, 1), "y": (0, 1)},
        constraints=(pred("c1", ("x", "y"), "eq"), pred("c2", ("x", "y"), "ne")),
    )
    out = solve(p, SearchConfig(heuristic=VOHeuristic(base="impact")))
    assert out.result == "unsat"
    assert out.stats.nodes == 0


def test_rand_value_order_still_correct():
    p = gen_model_d(n=8, d=4, e=14, t=0.5, seed=5)
    want = satisfiable(p)
    for seed in (0, 1, 2):
        out = solve(p, SearchConfig(value_order="rand", seed=seed, mode="decide"))
        assert out.result == ("sat" if want else "unsat")


def test_decide_mode_all_schemes():
    p = gen_model_d(n=10, d=4, e=18, t=0.5, seed=17)
    want = "sat" if satisfiable(p) else "unsat"
    for scheme, policy in (("arc", "fifo"), ("variable", "dom"), ("constraint", "c_wcon")):
        out = solve(p, SearchConfig(scheme=scheme, policy=policy, mode="decide"))
        assert out.result == want
