"""Coarse-grained (G)AC propagation.

Three schemes share one revision loop family: the pending queue holds arcs
(constraint, variable), variables, or constraints. Which element to revise
next is picked by a pluggable ordering policy; counters attached to
(constraint, variable) pairs let the variable- and constraint-oriented schemes
skip revisions that cannot prune anything.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Constraint, DomainStore, Problem, seek_support

SCHEMES = ("arc", "variable", "constraint")

ARC_POLICIES = (
    "fifo",
    "dom",
    "a_wcon",
    "a_wdeg",
    "a_dom/wdeg",
    "a_dom/wcon",
    "a_dom/wdeg_inverse",
    "a_dom/wcon_inverse",
)
VARIABLE_POLICIES = ("fifo", "dom", "v_wdeg", "v_dom/wdeg")
CONSTRAINT_POLICIES = ("c_wcon",)

POLICIES_BY_SCHEME = {
    "arc": ARC_POLICIES,
    "variable": VARIABLE_POLICIES,
    "constraint": CONSTRAINT_POLICIES,
}


def validate_policy(scheme: str, policy: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown propagation scheme {scheme!r}")
    if policy not in POLICIES_BY_SCHEME[scheme]:
        raise ValueError(f"revision policy {policy!r} does not fit scheme {scheme!r}")


@dataclass
class PropagationOutcome:
    """Result of one propagation call."""

    consistent: bool
    dwo_constraint: str | None = None
    dwo_variable: str | None = None
    removed: int = 0
    fruitful: frozenset[str] = frozenset()


class RevisionQueue:
    """Duplicate-free pending set in FIFO insertion order, plus ctr counters.

    ctr maps (constraint id, variable) to the number of values removed from
    that variable's domain since the constraint was last processed.
    """

    def __init__(self, kind: str):
        if kind not in SCHEMES:
            raise ValueError(f"unknown queue kind {kind!r}")
        self.kind = kind
        self._pending: dict = {}
        self.ctr: dict[tuple[str, str], int] = {}

    def __len__(self) -> int:
        return len(self._pending)

    def __bool__(self) -> bool:
        return bool(self._pending)

    def __contains__(self, elem) -> bool:
        return elem in self._pending

    def add(self, elem) -> None:
        if elem not in self._pending:
            self._pending[elem] = None

    def take(self, elem) -> None:
        del self._pending[elem]

    def elements(self) -> list:
        return list(self._pending)

    def bump(self, cid: str, x: str, removed: int) -> None:
        self.ctr[(cid, x)] = self.ctr.get((cid, x), 0) + removed

    def ctr_of(self, cid: str, x: str) -> int:
        return self.ctr.get((cid, x), 0)

    def reset_ctr(self, c: Constraint) -> None:
        for x in c.scope:
            self.ctr[(c.id, x)] = 0


def needs_not_be_revised(q: RevisionQueue, c: Constraint, x: str) -> bool:
    """True when x is the only variable of c with pending removals.

    Removing values from x cannot destroy supports of x's remaining values on
    c, so such a revision is provably redundant.
    """
    if q.ctr_of(c.id, x) <= 0:
        return False
    return all(y == x or q.ctr_of(c.id, y) <= 0 for y in c.scope)


def initial_queue(problem: Problem, scheme: str) -> RevisionQueue:
    """Preprocessing seeds: every element, all ctr counters set to 1."""
    q = RevisionQueue(scheme)
    if scheme == "arc":
        for c in problem.constraints:
            for x in c.scope:
                q.add((c.id, x))
    elif scheme == "variable":
        for x in problem.variables:
            q.add(x)
    else:
        for c in problem.constraints:
            q.add(c.id)
    for c in problem.constraints:
        for x in c.scope:
            q.ctr[(c.id, x)] = 1
    return q


def update_queue(problem: Problem, scheme: str, x: str, removed: int) -> RevisionQueue:
    """Seeds after removing `removed` values from D(x) at a search node.

    Only elements involving x are queued and only x's ctr entries are primed,
    set to the removal count. A zero removal count leaves the previous
    fixpoint intact, so the queue stays empty.
    """
    q = RevisionQueue(scheme)
    if removed <= 0:
        return q
    if scheme == "arc":
        for c in problem.constraints_on[x]:
            for z in c.scope:
                if z != x:
                    q.add((c.id, z))
    elif scheme == "variable":
        q.add(x)
    else:
        for c in problem.constraints_on[x]:
            q.add(c.id)
    for c in problem.constraints_on[x]:
        q.ctr[(c.id, x)] = removed
    return q


def revise(problem: Problem, d: DomainStore, c: Constraint, x: str, stats) -> int:
    """Remove the values of x without support on c; returns the removal count."""
    removed = 0
    for a in d.current(x):
        if not seek_support(problem, d, c, x, a, stats):
            d.remove(x, a)
            removed += 1
    return removed


class _UnitWeights:
    def get(self, cid: str) -> int:
        return 1

    def on_deletion(self, cid: str, removed: int) -> None:
        pass

    def on_dwo(self, cid: str, fruitful) -> None:
        pass


class _DefaultState:
    """Stand-in heuristic context: unit weights, nothing assigned."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.weights = _UnitWeights()
        self.assigned: set[str] = set()

    def wdeg(self, x: str) -> int:
        return sum(
            1
            for c in self.problem.constraints_on[x]
            if any(y != x for y in c.scope)
        )


def _ratio(dom_size: int, weight: int) -> float:
    return dom_size / weight if weight > 0 else float(dom_size)


def select_next(problem: Problem, q: RevisionQueue, policy: str, d: DomainStore, weights, wdeg):
    """Pop the next element to revise under `policy` (FIFO tie-break).

    `weights` supplies per-constraint weights via .get(cid); `wdeg` is a
    callable giving a variable's weighted degree. Scores are scanned lazily
    over the pending set in insertion order.
    """
    pending = q._pending
    if policy == "fifo":
        elem = next(iter(pending))
        q.take(elem)
        return elem
    best = None
    best_score = None
    if q.kind == "variable":
        if policy == "dom":
            score_of = d.size
        elif policy == "v_wdeg":
            score_of = lambda x: -wdeg(x)
        else:  # v_dom/wdeg
            score_of = lambda x: _ratio(d.size(x), wdeg(x))
        for x in pending:
            s = score_of(x)
            if best_score is None or s < best_score:
                best, best_score = x, s
    elif q.kind == "constraint":
        # c_wcon: heaviest constraint first
        for cid in pending:
            s = -weights.get(cid)
            if best_score is None or s < best_score:
                best, best_score = cid, s
    else:
        for cid, x in pending:
            if policy == "dom":
                s = d.size(x)
            elif policy == "a_wcon":
                s = -weights.get(cid)
            elif policy == "a_wdeg":
                s = -wdeg(x)
            elif policy == "a_dom/wdeg":
                s = _ratio(d.size(x), wdeg(x))
            elif policy == "a_dom/wcon":
                s = _ratio(d.size(x), weights.get(cid))
            elif policy == "a_dom/wdeg_inverse":
                others = [y for y in problem.by_id[cid].scope if y != x]
                s = min(_ratio(d.size(y), wdeg(y)) for y in others)
            elif policy == "a_dom/wcon_inverse":
                w = weights.get(cid)
                others = [y for y in problem.by_id[cid].scope if y != x]
                s = min(_ratio(d.size(y), w) for y in others)
            else:
                raise ValueError(f"unknown revision policy {policy!r}")
            if best_score is None or s < best_score:
                best, best_score = (cid, x), s
    q.take(best)
    return best


def propagate(
    problem: Problem,
    d: DomainStore,
    scheme: str,
    policy: str,
    queue: RevisionQueue,
    hstate=None,
    stats=None,
    update_weights: bool = True,
) -> PropagationOutcome:
    """Run the queue to fixpoint or to the first domain wipeout.

    The revisions counter r advances once per queue selection and the check
    counter advances inside check_tuple. Weight-update events (fruitful
    revisions, DWOs) are forwarded to hstate.weights unless update_weights is
    False (lookahead probing must not touch weights).
    """
    validate_policy(scheme, policy)
    if queue.kind != scheme:
        raise ValueError(f"queue kind {queue.kind!r} does not match scheme {scheme!r}")
    if hstate is None:
        hstate = _DefaultState(problem)
    if stats is None:
        stats = _NullStats()
    weights = hstate.weights
    wdeg = hstate.wdeg
    fruitful: set[str] = set()
    total_removed = 0

    def fruitful_revision(c: Constraint, x: str, removed: int) -> bool:
        """Bookkeeping shared by all schemes; returns True on wipeout."""
        nonlocal total_removed
        total_removed += removed
        fruitful.add(c.id)
        if update_weights:
            weights.on_deletion(c.id, removed)
        if d.size(x) == 0:
            if update_weights:
                weights.on_dwo(c.id, frozenset(fruitful))
            stats.dwos += 1
            return True
        return False

    def wipeout(c: Constraint, x: str) -> PropagationOutcome:
        return PropagationOutcome(
            consistent=False,
            dwo_constraint=c.id,
            dwo_variable=x,
            removed=total_removed,
            fruitful=frozenset(fruitful),
        )

    if scheme == "arc":
        while queue:
            stats.revisions += 1
            cid, x = select_next(problem, queue, policy, d, weights, wdeg)
            c = problem.by_id[cid]
            removed = revise(problem, d, c, x, stats)
            if removed > 0:
                if fruitful_revision(c, x, removed):
                    return wipeout(c, x)
                for c2 in problem.constraints_on[x]:
                    if c2.id == cid:
                        continue
                    for z in c2.scope:
                        if z != x:
                            queue.add((c2.id, z))
    elif scheme == "variable":
        weight_ordered = policy in ("v_wdeg", "v_dom/wdeg")
        while queue:
            stats.revisions += 1
            x = select_next(problem, queue, policy, d, weights, wdeg)
            cs = problem.constraints_on[x]
            if weight_ordered:
                cs = sorted(cs, key=lambda c: -weights.get(c.id))
            for c in cs:
                if queue.ctr_of(c.id, x) == 0:
                    continue
                for y in c.scope:
                    if needs_not_be_revised(queue, c, y):
                        continue
                    removed = revise(problem, d, c, y, stats)
                    if removed > 0:
                        if fruitful_revision(c, y, removed):
                            return wipeout(c, y)
                        queue.add(y)
                        for c2 in problem.constraints_on[y]:
                            if c2.id != c.id:
                                queue.bump(c2.id, y, removed)
                # c is now fully propagated: clear its pending-removal counters
                queue.reset_ctr(c)
    else:
        while queue:
            stats.revisions += 1
            cid = select_next(problem, queue, policy, d, weights, wdeg)
            c = problem.by_id[cid]
            for y in c.scope:
                if needs_not_be_revised(queue, c, y):
                    continue
                removed = revise(problem, d, c, y, stats)
                if removed > 0:
                    if fruitful_revision(c, y, removed):
                        return wipeout(c, y)
                    for c2 in problem.constraints_on[y]:
                        if c2.id != cid:
                            queue.add(c2.id)
                            queue.bump(c2.id, y, removed)
            queue.reset_ctr(c)

    return PropagationOutcome(
        consistent=True, removed=total_removed, fruitful=frozenset(fruitful)
    )


class _NullStats:
    checks = 0
    revisions = 0
    dwos = 0
