"""Variable ordering: syntactic scores, conflict-driven weights, impacts.

Scores are "smaller is preferred" throughout. Conflict-driven heuristics keep
a per-constraint weight store fed by propagation events; impact-based search
keeps running averages of observed search-space reductions. Lookahead
tie-breaks (restricted singleton probes, node impacts) and random probing live
here too.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .model import DomainStore, Problem
from .propagation import propagate, update_queue

BASES = (
    "dom",
    "deg",
    "ddeg",
    "dom+deg",
    "dom/ddeg",
    "mdvo",
    "wdeg",
    "dom/wdeg",
    "alldel",
    "fully",
    "impact",
)
CONFLICT_BASES = ("wdeg", "dom/wdeg", "alldel", "fully")
TIEBREAKS = ("lexico", "rsc", "nodeimpact")
WEIGHT_POLICIES = ("wdeg", "alldel", "fully")


@dataclass(frozen=True)
class ProbeConfig:
    """Random probing parameters: runs, per-run failure cutoff, RNG seed."""

    failures: int = 40
    runs: int = 50
    seed: int = 0


@dataclass(frozen=True)
class VOHeuristic:
    """A variable ordering: base measure, tie-break, optional probing."""

    base: str = "dom/wdeg"
    tiebreak: str = "lexico"
    probing: ProbeConfig | None = None
    mdvo_alpha: str = "dom/deg"  # "dom" (|D|) or "dom/deg" (|D|/|neighbors|)
    mdvo_op: str = "+"

    def __post_init__(self) -> None:
        if self.base not in BASES:
            raise ValueError(f"unknown heuristic base {self.base!r}")
        if self.tiebreak not in TIEBREAKS:
            raise ValueError(f"unknown tie-break {self.tiebreak!r}")
        if self.mdvo_alpha not in ("dom", "dom/deg"):
            raise ValueError(f"unknown mdvo alpha {self.mdvo_alpha!r}")
        if self.mdvo_op not in ("+", "*"):
            raise ValueError(f"unknown mdvo operator {self.mdvo_op!r}")
        if self.probing is not None and self.base not in CONFLICT_BASES:
            raise ValueError("random probing requires a conflict-driven base")


def weight_policy_for(base: str) -> str:
    if base == "alldel":
        return "alldel"
    if base == "fully":
        return "fully"
    return "wdeg"


def parse_heuristic(name: str, probe_seed: int = 0) -> VOHeuristic:
    """Parse a heuristic name like "dom/wdeg+probe+rsc" or "dom+deg".

    Suffixes: +rsc and +nodeimpact pick the tie-break, +probe turns on random
    probing with its default parameters and the given seed.
    """
    rest = name
    base = None
    for candidate in sorted(BASES, key=len, reverse=True):
        if rest == candidate or rest.startswith(candidate + "+"):
            base = candidate
            rest = rest[len(candidate):]
            break
    if base is None:
        raise ValueError(f"unknown heuristic {name!r}")
    tiebreak = "lexico"
    probing = None
    for token in filter(None, rest.split("+")):
        if token in ("rsc", "nodeimpact"):
            tiebreak = token
        elif token == "probe":
            probing = ProbeConfig(seed=probe_seed)
        else:
            raise ValueError(f"unknown heuristic suffix {token!r} in {name!r}")
    return VOHeuristic(base=base, tiebreak=tiebreak, probing=probing)


def heuristic_name(h: VOHeuristic) -> str:
    name = h.base
    if h.probing is not None:
        name += "+probe"
    if h.tiebreak != "lexico":
        name += "+" + h.tiebreak
    return name


class WeightStore:
    """Per-constraint conflict weights; start at 1 and never decrease."""

    def __init__(self, problem: Problem, policy: str = "wdeg"):
        if policy not in WEIGHT_POLICIES:
            raise ValueError(f"unknown weight policy {policy!r}")
        self.policy = policy
        self.weight: dict[str, int] = {c.id: 1 for c in problem.constraints}

    def get(self, cid: str) -> int:
        return self.weight[cid]

    def __getitem__(self, cid: str) -> int:
        return self.weight[cid]

    def on_deletion(self, cid: str, removed: int) -> None:
        """A fruitful revision by cid removed `removed` values."""
        if self.policy == "alldel":
            self.weight[cid] += removed

    def on_dwo(self, cid: str, fruitful: frozenset[str]) -> None:
        """Propagation ended in a domain wipeout caused by cid."""
        if self.policy == "wdeg":
            self.weight[cid] += 1
        elif self.policy == "fully":
            for c in set(fruitful) | {cid}:
                self.weight[c] += 1

    def snapshot(self) -> dict[str, int]:
        return dict(self.weight)


@dataclass(frozen=True)
class Deletions:
    """Fruitful-revision event: constraint removed `removed` values."""

    constraint: str
    removed: int


@dataclass(frozen=True)
class Dwo:
    """Wipeout event: the failing constraint plus the propagation's fruitful set."""

    constraint: str
    fruitful: frozenset[str] = frozenset()


def record_failure(weights: WeightStore, event) -> None:
    """Apply one propagation event to the store under its update policy."""
    if isinstance(event, Deletions):
        weights.on_deletion(event.constraint, event.removed)
    elif isinstance(event, Dwo):
        weights.on_dwo(event.constraint, event.fruitful)
    else:
        raise TypeError(f"unknown event {event!r}")


class HeuristicState:
    """Mutable per-solve context shared by search and propagation ordering."""

    def __init__(self, problem: Problem, weights: WeightStore, impacts: "ImpactStore | None" = None):
        self.problem = problem
        self.weights = weights
        self.impacts = impacts
        self.assigned: set[str] = set()

    def qualified(self, c, x: str) -> bool:
        # a constraint counts for x only while it can still propagate somewhere
        return any(y != x and y not in self.assigned for y in c.scope)

    def wdeg(self, x: str) -> int:
        return sum(
            self.weights.get(c.id)
            for c in self.problem.constraints_on[x]
            if self.qualified(c, x)
        )

    def ddeg(self, x: str) -> int:
        return sum(1 for c in self.problem.constraints_on[x] if self.qualified(c, x))


def score_variable(h: VOHeuristic, x: str, problem: Problem, d: DomainStore, hstate: HeuristicState):
    """Score one unassigned variable; smaller is preferred.

    Ratio heuristics fall back to plain |D(x)| when the denominator has no
    qualifying constraint (division guard).
    """
    dom = d.size(x)
    base = h.base
    if base == "dom":
        return dom
    if base == "deg":
        return -len(problem.neighborhood[x])
    if base == "ddeg":
        return -hstate.ddeg(x)
    if base == "dom+deg":
        return (dom, -len(problem.neighborhood[x]))
    if base == "dom/ddeg":
        dd = hstate.ddeg(x)
        return dom / dd if dd > 0 else float(dom)
    if base == "mdvo":
        return _mdvo_score(h, x, problem, d)
    if base == "wdeg":
        w = hstate.wdeg(x)
        return -w if w > 0 else float(dom)
    if base in ("dom/wdeg", "alldel", "fully"):
        w = hstate.wdeg(x)
        return dom / w if w > 0 else float(dom)
    if base == "impact":
        if hstate.impacts is None:
            raise ValueError("impact heuristic used without an impact store")
        return variable_impact(hstate.impacts, x, d)
    raise ValueError(f"unknown heuristic base {base!r}")


def _mdvo_score(h: VOHeuristic, x: str, problem: Problem, d: DomainStore) -> float:
    """Mean pairwise constrainedness of x against its neighborhood."""
    gamma = problem.neighborhood[x]
    if not gamma:
        return float(d.size(x))

    def alpha(y: str) -> float:
        if h.mdvo_alpha == "dom":
            return float(d.size(y))
        return d.size(y) / len(problem.neighborhood[y])

    ax = alpha(x)
    if h.mdvo_op == "+":
        total = sum(ax + alpha(y) for y in gamma)
    else:
        total = sum(ax * alpha(y) for y in gamma)
    return total / (len(gamma) ** 2)


def select_variable(
    h: VOHeuristic,
    problem: Problem,
    d: DomainStore,
    hstate: HeuristicState,
    stats=None,
    scheme: str = "variable",
    policy: str = "fifo",
) -> str | None:
    """Pick the next unassigned variable, or None when a tie-break probe wipes out.

    The candidate set is the argmin of the base score; ties go to the
    configured tie-break (declaration order for "lexico"). Probing tie-breaks
    only run when more than one candidate is tied.
    """
    best_score = None
    candidates: list[str] = []
    for x in problem.variables:
        if x in hstate.assigned:
            continue
        s = score_variable(h, x, problem, d, hstate)
        if best_score is None or s < best_score:
            best_score = s
            candidates = [x]
        elif s == best_score:
            candidates.append(x)
    if not candidates:
        raise ValueError("no unassigned variable to select")
    if len(candidates) == 1 or h.tiebreak == "lexico":
        return candidates[0]
    if h.tiebreak == "rsc":
        return rsc_tiebreak(candidates, problem, d, scheme, policy, hstate, stats)
    return node_impact_tiebreak(
        candidates, problem, d, hstate.impacts, scheme, policy, hstate, stats
    )


# --- impacts ---------------------------------------------------------------


class ImpactStore:
    """Running averages of observed impacts, keyed by (variable, value)."""

    def __init__(self):
        self._sum: dict[tuple[str, int], float] = {}
        self._count: dict[tuple[str, int], int] = {}

    def observe(self, x: str, a: int, impact: float) -> None:
        key = (x, a)
        self._sum[key] = self._sum.get(key, 0.0) + impact
        self._count[key] = self._count.get(key, 0) + 1

    def averaged(self, x: str, a: int) -> float:
        key = (x, a)
        if key not in self._count:
            raise ValueError(f"no impact observation for {x}={a}")
        return self._sum[key] / self._count[key]

    def known(self, x: str, a: int) -> bool:
        return (x, a) in self._count


def observe_impact(store: ImpactStore, x: str, a: int, p_before: int, p_after: int) -> float:
    """Record one observation I = 1 - P_after/P_before and return it."""
    if p_before <= 0:
        raise ValueError("P_before must be positive")
    impact = 1.0 - (p_after / p_before)
    store.observe(x, a, impact)
    return impact


def averaged_impact(store: ImpactStore, x: str, a: int) -> float:
    return store.averaged(x, a)


def variable_impact(store: ImpactStore, x: str, d: DomainStore) -> float:
    """Sum of (1 - averaged impact) over the live values of x."""
    return sum(1.0 - store.averaged(x, a) for a in d.current(x))


def space_product(problem: Problem, d: DomainStore, assigned: set[str], exclude: str | None = None) -> int:
    """Product of current domain sizes over unassigned variables."""
    p = 1
    for y in problem.variables:
        if y in assigned or y == exclude:
            continue
        p *= d.size(y)
    return p


def partition_parts(values: list[int], max_parts: int = 4) -> list[list[int]]:
    """Split values into at most max_parts contiguous runs of near-equal size.

    Earlier parts take the remainder, so sizes differ by at most one.
    """
    n = len(values)
    parts = min(max_parts, n)
    if parts == 0:
        return []
    base, rem = divmod(n, parts)
    out = []
    start = 0
    for i in range(parts):
        size = base + (1 if i < rem else 0)
        out.append(values[start : start + size])
        start += size
    return out


def init_impacts(
    problem: Problem,
    d: DomainStore,
    store: ImpactStore,
    scheme: str,
    policy: str,
    hstate: HeuristicState,
    stats,
    max_parts: int = 4,
) -> bool:
    """Initialize impacts by probing contiguous sub-domains of every variable.

    Each part is propagated in isolation and restored; a part that wipes out
    records impact 1 for its values. Returns False when every part of some
    variable wipes out (the problem is inconsistent).
    """
    for x in problem.variables:
        live_parts = 0
        for part in partition_parts(sorted(d.current(x)), max_parts):
            root = d.mark()
            removed = 0
            for v in d.current(x):
                if v not in part:
                    d.remove(x, v)
                    removed += 1
            p_before = space_product(problem, d, hstate.assigned, exclude=x)
            out = propagate(
                problem,
                d,
                scheme,
                policy,
                update_queue(problem, scheme, x, removed),
                hstate,
                stats,
                update_weights=False,
            )
            if out.consistent:
                live_parts += 1
                p_after = space_product(problem, d, hstate.assigned, exclude=x)
            else:
                p_after = 0
            for a in part:
                observe_impact(store, x, a, p_before, p_after)
            d.restore(root)
        if live_parts == 0:
            return False
    return True


def _probe_value(problem, d, x, a, scheme, policy, hstate, stats):
    """Assign x=a, propagate without weight updates, measure, restore.

    Returns (consistent, p_before, p_after).
    """
    root = d.mark()
    removed = d.assign(x, a)
    hstate.assigned.add(x)
    p_before = space_product(problem, d, hstate.assigned)
    out = propagate(
        problem,
        d,
        scheme,
        policy,
        update_queue(problem, scheme, x, removed),
        hstate,
        stats,
        update_weights=False,
    )
    p_after = space_product(problem, d, hstate.assigned) if out.consistent else 0
    hstate.assigned.discard(x)
    d.restore(root)
    return out.consistent, p_before, p_after


def node_impact_tiebreak(
    candidates: list[str],
    problem: Problem,
    d: DomainStore,
    store: ImpactStore | None,
    scheme: str,
    policy: str,
    hstate: HeuristicState,
    stats,
) -> str | None:
    """Break ties with exact impacts measured at this node.

    Every candidate value is probed; values that wipe out are pruned from the
    real domain. Returns None when a candidate's domain empties (the caller
    must fail the node). The candidate with the smallest summed residual
    (1 - impact) wins, first-listed on ties.
    """
    best = None
    best_total = None
    for x in candidates:
        wiped = []
        total = 0.0
        for a in d.current(x):
            ok, p_before, p_after = _probe_value(
                problem, d, x, a, scheme, policy, hstate, stats
            )
            impact = 1.0 - (p_after / p_before) if p_before > 0 else 1.0
            if store is not None:
                store.observe(x, a, impact)
            if not ok:
                wiped.append(a)
            total += 1.0 - impact
        for a in wiped:
            d.remove(x, a)
        if d.size(x) == 0:
            return None
        if best_total is None or total < best_total:
            best, best_total = x, total
    return best


def rsc_tiebreak(
    candidates: list[str],
    problem: Problem,
    d: DomainStore,
    scheme: str,
    policy: str,
    hstate: HeuristicState,
    stats,
) -> str | None:
    """Break ties by total search-space reduction over one singleton pass.

    Each candidate value gets a single assign-and-propagate probe; wiped
    values are pruned from the real domain (None on an emptied candidate).
    The candidate with the largest total reduction wins, first-listed on ties.
    """
    best = None
    best_total = None
    for x in candidates:
        wiped = []
        total = 0
        for a in d.current(x):
            ok, p_before, p_after = _probe_value(
                problem, d, x, a, scheme, policy, hstate, stats
            )
            total += p_before - p_after
            if not ok:
                wiped.append(a)
        for a in wiped:
            d.remove(x, a)
        if d.size(x) == 0:
            return None
        if best_total is None or total > best_total:
            best, best_total = x, total
    return best


# --- random probing ---------------------------------------------------------


class _ProbeCutoff(Exception):
    pass


def random_probe(
    problem: Problem,
    d: DomainStore,
    cfg: ProbeConfig,
    weights: WeightStore,
    hstate: HeuristicState,
    scheme: str,
    policy: str,
    stats,
    deadline: float | None = None,
) -> tuple[WeightStore, tuple[str, dict | None] | None]:
    """Run short randomized probes to warm up the conflict weights.

    Each probe is a depth-first d-way search with uniformly random variable
    selection and value order, aborted once cfg.failures wipeouts have been
    seen. Weights accumulate across probes under the active update policy.
    Returns the store plus a definitive ("sat", assignment) or ("unsat", None)
    result when a probe happens to settle the instance, else None.
    """
    rng = random.Random(cfg.seed)
    assignment: dict[str, int] = {}
    failures = 0

    def saw_wipeout() -> None:
        nonlocal failures
        failures += 1
        if failures >= cfg.failures:
            raise _ProbeCutoff

    def dfs() -> bool:
        if deadline is not None and time.monotonic() >= deadline:
            raise TimeoutError
        unassigned = [x for x in problem.variables if x not in hstate.assigned]
        if not unassigned:
            return True
        x = rng.choice(unassigned)
        order = sorted(d.current(x))
        rng.shuffle(order)
        for a in order:
            if not d.contains(x, a):
                continue
            stats.nodes += 1
            root = d.mark()
            removed = d.assign(x, a)
            hstate.assigned.add(x)
            assignment[x] = a
            out = propagate(
                problem, d, scheme, policy,
                update_queue(problem, scheme, x, removed),
                hstate, stats,
            )
            if out.consistent:
                if dfs():
                    return True
                hstate.assigned.discard(x)
                del assignment[x]
                d.restore(root)
            else:
                hstate.assigned.discard(x)
                del assignment[x]
                d.restore(root)
                saw_wipeout()
            d.remove(x, a)
            if d.size(x) == 0:
                return False
            out = propagate(
                problem, d, scheme, policy,
                update_queue(problem, scheme, x, 1),
                hstate, stats,
            )
            if not out.consistent:
                saw_wipeout()
                return False
        return False

    definitive = None
    for _ in range(cfg.runs):
        probe_root = d.mark()
        saved_assigned = set(hstate.assigned)
        failures = 0
        try:
            if dfs():
                definitive = ("sat", dict(assignment))
            elif definitive is None:
                # the probe exhausted the tree without hitting its cutoff
                definitive = ("unsat", None)
        except _ProbeCutoff:
            pass
        assignment.clear()
        hstate.assigned.clear()
        hstate.assigned.update(saved_assigned)
        d.restore(probe_root)
        if definitive is not None:
            break
    return weights, definitive
