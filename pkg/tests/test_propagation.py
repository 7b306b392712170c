import pytest

from oracle import ac_fixpoint
from macsolver.heuristics import HeuristicState, WeightStore
from macsolver.instances import gen_model_d
from macsolver.model import Constraint, DomainStore, Problem
from macsolver.propagation import (
    POLICIES_BY_SCHEME,
    RevisionQueue,
    initial_queue,
    needs_not_be_revised,
    propagate,
    revise,
    select_next,
    update_queue,
    validate_policy,
)

ALL_COMBOS = [(s, p) for s, pols in POLICIES_BY_SCHEME.items() for p in pols]


class Stats:
    def __init__(self):
        self.checks = 0
        self.revisions = 0
        self.dwos = 0


def pred(cid, scope, name, k=None):
    return Constraint(id=cid, scope=scope, kind="predicate", pred=name, k=k)


def chain_problem():
    # x < y < z over {1,2,3}; unique fixpoint x={1}, y={2}, z={3}
    return Problem(
        name="chain",
        variables=("x", "y", "z"),
        domains={"x": (1, 2, 3), "y": (1, 2, 3), "z": (1, 2, 3)},
        constraints=(pred("cxy", ("x", "y"), "lt"), pred("cyz", ("y", "z"), "lt")),
    )


def run_to_fixpoint(problem, scheme, policy, hstate=None, stats=None):
    d = DomainStore(problem)
    out = propagate(
        problem, d, scheme, policy, initial_queue(problem, scheme), hstate, stats
    )
    return d, out


def test_revise_removes_unsupported():
    p = chain_problem()
    d = DomainStore(p)
    s = Stats()
    assert revise(p, d, p.by_id["cxy"], "x", s) == 1  # x=3 has no y above it
    assert sorted(d.current("x")) == [1, 2]
    assert revise(p, d, p.by_id["cxy"], "x", s) == 0  # already supported


@pytest.mark.parametrize("scheme,policy", ALL_COMBOS)
def test_chain_fixpoint_all_combos(scheme, policy):
    d, out = run_to_fixpoint(chain_problem(), scheme, policy)
    assert out.consistent
    assert d.current("x") == [1]
    assert d.current("y") == [2]
    assert d.current("z") == [3]


def test_propagate_counts_revisions_and_dwos():
    s = Stats()
    d, out = run_to_fixpoint(chain_problem(), "arc", "fifo", stats=s)
    assert out.consistent
    assert s.revisions > 0
    assert s.checks > 0
    assert s.dwos == 0


def test_propagate_idempotent():
    p = chain_problem()
    d, out = run_to_fixpoint(p, "variable", "fifo")
    again = propagate(p, d, "variable", "fifo", initial_queue(p, "variable"))
    assert again.consistent
    assert again.removed == 0
    assert again.fruitful == frozenset()


def test_wipeout_outcome_fields():
    # x < y and x > y cannot both hold
    p = Problem(
        name="contradiction",
        variables=("x", "y"),
        domains={"x": (0, 1), "y": (0, 1)},
        constraints=(pred("c1", ("x", "y"), "lt"), pred("c2", ("x", "y"), "gt")),
    )
    s = Stats()
    d, out = run_to_fixpoint(p, "arc", "fifo", stats=s)
    assert not out.consistent
    assert out.dwo_constraint in ("c1", "c2")
    assert out.dwo_variable in ("x", "y")
    assert out.removed > 0
    assert out.dwo_constraint in out.fruitful
    assert s.dwos == 1
    assert d.wiped()


def test_queue_is_duplicate_free_fifo():
    q = RevisionQueue("variable")
    q.add("a")
    q.add("b")
    q.add("a")
    assert len(q) == 2
    assert q.elements() == ["a", "b"]
    assert "a" in q
    q.take("a")
    assert q.elements() == ["b"]


def test_queue_rejects_unknown_kind():
    with pytest.raises(ValueError):
        RevisionQueue("nosuch")


def test_ctr_bookkeeping():
    q = RevisionQueue("constraint")
    q.bump("c", "x", 2)
    q.bump("c", "x", 3)
    assert q.ctr_of("c", "x") == 5
    assert q.ctr_of("c", "y") == 0
    q.reset_ctr(pred("c", ("x", "y"), "ne"))
    assert q.ctr_of("c", "x") == 0


def test_needs_not_be_revised():
    c = Constraint(
        id="c",
        scope=("x", "y", "z"),
        kind="forbidden",
        tuples=frozenset({(0, 0, 0)}),
    )
    q = RevisionQueue("variable")
    # no removals anywhere: revision of x is not provably redundant
    assert not needs_not_be_revised(q, c, "x")
    q.bump("c", "x", 1)
    # x is the only variable with pending removals: x needs no revision...
    assert needs_not_be_revised(q, c, "x")
    # ...but the others do
    assert not needs_not_be_revised(q, c, "y")
    q.bump("c", "y", 1)
    # another variable has removals too, x must be revised again
    assert not needs_not_be_revised(q, c, "x")


def test_initial_queue_seeds_everything():
    p = chain_problem()
    q = initial_queue(p, "arc")
    assert set(q.elements()) == {
        ("cxy", "x"),
        ("cxy", "y"),
        ("cyz", "y"),
        ("cyz", "z"),
    }
    assert all(q.ctr_of(c.id, x) == 1 for c in p.constraints for x in c.scope)
    qv = initial_queue(p, "variable")
    assert qv.elements() == ["x", "y", "z"]
    qc = initial_queue(p, "constraint")
    assert qc.elements() == ["cxy", "cyz"]


def test_update_queue_seeds_touched_cone():
    p = chain_problem()
    q = update_queue(p, "arc", "y", 2)
    # only the other variables of y's constraints are queued
    assert set(q.elements()) == {("cxy", "x"), ("cyz", "z")}
    assert q.ctr_of("cxy", "y") == 2
    assert q.ctr_of("cyz", "y") == 2
    assert q.ctr_of("cxy", "x") == 0
    qv = update_queue(p, "variable", "y", 1)
    assert qv.elements() == ["y"]
    qc = update_queue(p, "constraint", "y", 1)
    assert qc.elements() == ["cxy", "cyz"]


def test_update_queue_zero_removals_is_noop():
    p = chain_problem()
    for scheme in ("arc", "variable", "constraint"):
        q = update_queue(p, scheme, "y", 0)
        assert len(q) == 0
        assert not q.ctr


def test_validate_policy():
    validate_policy("arc", "a_dom/wdeg")
    validate_policy("variable", "v_wdeg")
    validate_policy("constraint", "c_wcon")
    with pytest.raises(ValueError):
        validate_policy("nosuch", "fifo")
    with pytest.raises(ValueError):
        validate_policy("arc", "v_wdeg")
    with pytest.raises(ValueError):
        validate_policy("variable", "a_wdeg")
    with pytest.raises(ValueError):
        validate_policy("constraint", "fifo")


def test_propagate_rejects_mismatched_queue():
    p = chain_problem()
    d = DomainStore(p)
    with pytest.raises(ValueError):
        propagate(p, d, "arc", "fifo", initial_queue(p, "variable"))


class DictWeights:
    def __init__(self, table):
        self.table = table

    def get(self, cid):
        return self.table[cid]


def selection_problem():
    # a: 4 values, b: 1 value, e: 2 values; c1 on (a,b), c2 on (a,e)
    return Problem(
        name="sel",
        variables=("a", "b", "e"),
        domains={"a": (0, 1, 2, 3), "b": (0,), "e": (0, 1)},
        constraints=(pred("c1", ("a", "b"), "ne"), pred("c2", ("a", "e"), "ne")),
    )


def test_select_next_fifo_and_dom():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 1, "c2": 1})
    wdeg = lambda x: 1

    q = RevisionQueue("arc")
    q.add(("c2", "a"))
    q.add(("c1", "b"))
    assert select_next(p, q, "fifo", d, w, wdeg) == ("c2", "a")

    q = RevisionQueue("arc")
    q.add(("c2", "a"))  # |D(a)| = 4
    q.add(("c1", "b"))  # |D(b)| = 1
    assert select_next(p, q, "dom", d, w, wdeg) == ("c1", "b")


def test_select_next_fifo_breaks_score_ties():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 1, "c2": 1})
    q = RevisionQueue("arc")
    q.add(("c1", "a"))
    q.add(("c2", "a"))  # same variable, same score
    assert select_next(p, q, "dom", d, w, lambda x: 1) == ("c1", "a")


def test_select_next_weight_policies():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 1, "c2": 5})
    wdeg = lambda x: {"a": 1, "b": 7, "e": 2}[x]

    q = RevisionQueue("arc")
    q.add(("c1", "a"))
    q.add(("c2", "a"))
    assert select_next(p, q, "a_wcon", d, w, wdeg) == ("c2", "a")  # heaviest constraint

    q = RevisionQueue("arc")
    q.add(("c1", "a"))
    q.add(("c1", "b"))
    assert select_next(p, q, "a_wdeg", d, w, wdeg) == ("c1", "b")  # max wdeg

    q = RevisionQueue("arc")
    q.add(("c1", "a"))  # 4/1 = 4
    q.add(("c1", "b"))  # 1/7
    assert select_next(p, q, "a_dom/wdeg", d, w, wdeg) == ("c1", "b")

    q = RevisionQueue("arc")
    q.add(("c1", "a"))  # 4/1 = 4
    q.add(("c2", "a"))  # 4/5
    assert select_next(p, q, "a_dom/wcon", d, w, wdeg) == ("c2", "a")


def test_select_next_inverse_policies_score_other_variables():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 1, "c2": 1})
    wdeg = lambda x: 1

    # both arcs revise a (same best-first score); the inverse rule looks at
    # the other scope variable instead: b gives 1/1, e gives 2/1
    q = RevisionQueue("arc")
    q.add(("c2", "a"))
    q.add(("c1", "a"))
    assert select_next(p, q, "a_dom/wdeg_inverse", d, w, wdeg) == ("c1", "a")

    w2 = DictWeights({"c1": 1, "c2": 4})
    # c1: min over {b} of 1/w(c1)=1; c2: min over {e} of 2/w(c2)=0.5
    q = RevisionQueue("arc")
    q.add(("c1", "a"))
    q.add(("c2", "a"))
    assert select_next(p, q, "a_dom/wcon_inverse", d, w2, wdeg) == ("c2", "a")


def test_select_next_variable_policies():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 1, "c2": 1})
    wdeg = lambda x: {"a": 1, "b": 7, "e": 2}[x]

    q = RevisionQueue("variable")
    q.add("a")
    q.add("b")
    assert select_next(p, q, "dom", d, w, wdeg) == "b"

    q = RevisionQueue("variable")
    q.add("a")
    q.add("b")
    assert select_next(p, q, "v_wdeg", d, w, wdeg) == "b"

    q = RevisionQueue("variable")
    q.add("a")  # 4/1
    q.add("e")  # 2/2
    assert select_next(p, q, "v_dom/wdeg", d, w, wdeg) == "e"


def test_select_next_constraint_policy():
    p = selection_problem()
    d = DomainStore(p)
    w = DictWeights({"c1": 2, "c2": 9})
    q = RevisionQueue("constraint")
    q.add("c1")
    q.add("c2")
    assert select_next(p, q, "c_wcon", d, w, lambda x: 1) == "c2"


def example1_problem():
    # two independent unsatisfiable constraints: x1 > x2 and x5 > x6
    return Problem(
        name="example1",
        variables=("x1", "x2", "x5", "x6"),
        domains={"x1": (0, 1), "x2": (2, 3), "x5": (0, 1), "x6": (2, 3)},
        constraints=(pred("c12", ("x1", "x2"), "gt"), pred("c56", ("x5", "x6"), "gt")),
    )


def test_first_revised_constraint_takes_the_blame():
    p = example1_problem()
    for order, blamed, spared in (
        ([("c12", "x1"), ("c12", "x2"), ("c56", "x5"), ("c56", "x6")], "c12", "c56"),
        ([("c56", "x6"), ("c56", "x5"), ("c12", "x2"), ("c12", "x1")], "c56", "c12"),
    ):
        d = DomainStore(p)
        ws = WeightStore(p, "wdeg")
        hstate = HeuristicState(p, ws)
        q = RevisionQueue("arc")
        for elem in order:
            q.add(elem)
        out = propagate(p, d, "arc", "fifo", q, hstate)
        assert not out.consistent
        assert out.dwo_constraint == blamed
        assert ws.get(blamed) == 2
        assert ws.get(spared) == 1


def test_update_weights_false_freezes_store():
    p = example1_problem()
    d = DomainStore(p)
    ws = WeightStore(p, "wdeg")
    hstate = HeuristicState(p, ws)
    out = propagate(
        p, d, "arc", "fifo", initial_queue(p, "arc"), hstate, update_weights=False
    )
    assert not out.consistent
    assert ws.snapshot() == {"c12": 1, "c56": 1}


def test_nary_constraint_propagation():
    # forbidden all-equal over 4 variables; z only has the shared value
    c = Constraint(
        id="c",
        scope=("w", "x", "y", "z"),
        kind="forbidden",
        tuples=frozenset({(5, 5, 5, 5)}),
    )
    p = Problem(
        name="nary",
        variables=("w", "x", "y", "z"),
        domains={"w": (5,), "x": (5,), "y": (5,), "z": (5, 6)},
        constraints=(c,),
    )
    for scheme, policy in ALL_COMBOS:
        d, out = run_to_fixpoint(p, scheme, policy)
        assert out.consistent, (scheme, policy)
        assert d.current("z") == [6], (scheme, policy)


@pytest.mark.parametrize("scheme,policy", ALL_COMBOS)
def test_fixpoint_matches_reference(scheme, policy):
    for seed in range(30):
        n, d_size = 4 + seed % 9, 2 + seed % 6
        e = min(n * (n - 1) // 2, n + seed % 5)
        p = gen_model_d(n=n, d=d_size, e=e, t=0.45, seed=seed)
        want = ac_fixpoint(p)
        store = DomainStore(p)
        out = propagate(p, store, scheme, policy, initial_queue(p, scheme))
        if want is None:
            assert not out.consistent, seed
        else:
            assert out.consistent, seed
            got = {x: set(store.current(x)) for x in p.variables}
            assert got == {k: set(v) for k, v in want.items()}, seed


def test_removed_totals_match_domain_shrinkage():
    p = gen_model_d(n=8, d=5, e=12, t=0.5, seed=3)
    d = DomainStore(p)
    before = sum(d.size(x) for x in p.variables)
    out = propagate(p, d, "variable", "fifo", initial_queue(p, "variable"))
    after = sum(d.size(x) for x in p.variables)
    if out.consistent:
        assert before - after == out.removed
