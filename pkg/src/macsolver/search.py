"""Depth-first maintained-(G)AC search with d-way branching and restarts.

A node assigns one value and re-establishes consistency; on failure the value
is removed, consistency is re-established, and the next value is tried.
Restart policies cap the failed value attempts per run; conflict weights and
impact averages survive restarts.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from . import model
from .heuristics import (
    HeuristicState,
    ImpactStore,
    VOHeuristic,
    WeightStore,
    init_impacts,
    observe_impact,
    random_probe,
    select_variable,
    space_product,
    weight_policy_for,
)
from .propagation import initial_queue, propagate, update_queue, validate_policy


@dataclass
class SearchStats:
    """Run counters: n nodes, c checks, r queue selections, DWOs, restarts."""

    nodes: int = 0
    checks: int = 0
    revisions: int = 0
    dwos: int = 0
    restarts: int = 0
    time_ms: float = 0.0


@dataclass(frozen=True)
class GeometricRestarts:
    base: int = 10
    factor: float = 1.5

    def __post_init__(self) -> None:
        if self.base < 1 or self.factor <= 1.0:
            raise ValueError("geometric restarts need base >= 1 and factor > 1")


@dataclass(frozen=True)
class ArithmeticRestarts:
    base: int = 10
    step: int = 10

    def __post_init__(self) -> None:
        if self.base < 1 or self.step < 1:
            raise ValueError("arithmetic restarts need base >= 1 and step >= 1")


RestartPolicy = "GeometricRestarts | ArithmeticRestarts | None"


def next_cutoff(policy, run_index: int) -> int | None:
    """Failed-attempt budget for run number run_index (None = unlimited)."""
    if policy is None:
        return None
    if isinstance(policy, GeometricRestarts):
        return math.floor(policy.base * policy.factor**run_index)
    if isinstance(policy, ArithmeticRestarts):
        return policy.base + policy.step * run_index
    raise TypeError(f"unknown restart policy {policy!r}")


def parse_restarts(text: str):
    """Parse "geo:BASE:FACTOR", "arith:BASE:STEP", or "none"."""
    if text == "none":
        return None
    parts = text.split(":")
    if len(parts) == 3 and parts[0] == "geo":
        return GeometricRestarts(base=int(parts[1]), factor=float(parts[2]))
    if len(parts) == 3 and parts[0] == "arith":
        return ArithmeticRestarts(base=int(parts[1]), step=int(parts[2]))
    raise ValueError(f"bad restart spec {text!r}")


def restarts_name(policy) -> str:
    if policy is None:
        return "none"
    if isinstance(policy, GeometricRestarts):
        factor = policy.factor
        ftext = str(int(factor)) if float(factor).is_integer() else str(factor)
        return f"geo:{policy.base}:{ftext}"
    return f"arith:{policy.base}:{policy.step}"


@dataclass(frozen=True)
class SearchConfig:
    """Everything a solve needs besides the problem itself.

    mode is "first" (stop at one solution), "count" (count all; restarts are
    ignored since every run must exhaust the tree), or "decide" (sat/unsat
    answer only).
    """

    heuristic: VOHeuristic = field(default_factory=VOHeuristic)
    scheme: str = "variable"
    policy: str = "fifo"
    restarts: GeometricRestarts | ArithmeticRestarts | None = None
    value_order: str = "lex"
    seed: int = 0
    mode: str = "first"
    timeout: float = 3600.0

    def __post_init__(self) -> None:
        validate_policy(self.scheme, self.policy)
        if self.value_order not in ("lex", "rand"):
            raise ValueError(f"unknown value order {self.value_order!r}")
        if self.mode not in ("first", "count", "decide"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class SearchOutcome:
    """Solve result: sat/unsat/timeout, optional solution, count, counters."""

    result: str
    solution: dict[str, int] | None
    count: int
    stats: SearchStats
    weights: WeightStore


def order_values(x: str, d, mode: str, seed: int, index: int = 0) -> list[int]:
    """Values of x in the order search will try them.

    "lex" is ascending; "rand" is a seeded shuffle that depends only on the
    seed and the variable's declaration index, so reruns reproduce it.
    """
    values = sorted(d.current(x))
    if mode == "rand":
        rng = random.Random(seed * 1_000_003 + index)
        rng.shuffle(values)
    return values


class _CutoffReached(Exception):
    pass


def _verify(problem: model.Problem, assignment: dict[str, int], stats) -> bool:
    return all(
        model.check_tuple(c, tuple(assignment[v] for v in c.scope), stats)
        for c in problem.constraints
    )


def solve(problem: model.Problem, cfg: SearchConfig) -> SearchOutcome:
    """Solve one instance under one configuration.

    Preprocesses to full consistency, then searches depth-first with d-way
    branching, restarting per cfg.restarts. Satisfiable answers are verified
    against every constraint before they are reported.
    """
    t0 = time.monotonic()
    deadline = t0 + cfg.timeout
    stats = SearchStats()
    heur = cfg.heuristic
    weights = WeightStore(problem, policy=weight_policy_for(heur.base))
    impacts = (
        ImpactStore()
        if heur.base == "impact" or heur.tiebreak == "nodeimpact"
        else None
    )
    hstate = HeuristicState(problem, weights, impacts)
    d = model.DomainStore(problem)
    assignment: dict[str, int] = {}
    solution: dict[str, int] | None = None
    count = 0
    track_impacts = heur.base == "impact"

    def finish(result: str) -> SearchOutcome:
        stats.time_ms = (time.monotonic() - t0) * 1000.0
        return SearchOutcome(
            result=result,
            solution=solution,
            count=count,
            stats=stats,
            weights=weights,
        )

    out = propagate(
        problem, d, cfg.scheme, cfg.policy, initial_queue(problem, cfg.scheme),
        hstate, stats,
    )
    if not out.consistent:
        return finish("unsat")

    if heur.base == "impact":
        if not init_impacts(
            problem, d, impacts, cfg.scheme, cfg.policy, hstate, stats
        ):
            return finish("unsat")

    if heur.probing is not None:
        try:
            _, definitive = random_probe(
                problem, d, heur.probing, weights, hstate,
                cfg.scheme, cfg.policy, stats, deadline,
            )
        except TimeoutError:
            return finish("timeout")
        if definitive is not None:
            verdict, probe_solution = definitive
            if verdict == "sat":
                if not _verify(problem, probe_solution, stats):
                    raise RuntimeError("probe produced an invalid solution")
                solution = probe_solution
                if cfg.mode != "count":
                    return finish("sat")
                # fall through: count mode still needs the full tree
                solution = None
            else:
                return finish("unsat")

    root = d.mark()
    budget_left: list[int | None] = [None]

    def on_failed_attempt() -> None:
        left = budget_left[0]
        if left is None:
            return
        left -= 1
        budget_left[0] = left
        if left < 0:
            raise _CutoffReached

    def dfs() -> bool:
        nonlocal solution, count
        if len(assignment) == len(problem.variables):
            if not _verify(problem, assignment, stats):
                raise RuntimeError("search produced an invalid solution")
            if cfg.mode == "count":
                count += 1
                return False
            solution = dict(assignment)
            return True
        x = select_variable(
            heur, problem, d, hstate, stats, cfg.scheme, cfg.policy
        )
        if x is None:
            # a tie-break probe emptied a candidate's domain
            return False
        order = order_values(x, d, cfg.value_order, cfg.seed, problem.var_index[x])
        for a in order:
            if not d.contains(x, a):
                continue
            if time.monotonic() >= deadline:
                raise TimeoutError
            stats.nodes += 1
            node = d.mark()
            removed = d.assign(x, a)
            hstate.assigned.add(x)
            assignment[x] = a
            p_before = (
                space_product(problem, d, hstate.assigned) if track_impacts else 0
            )
            out = propagate(
                problem, d, cfg.scheme, cfg.policy,
                update_queue(problem, cfg.scheme, x, removed),
                hstate, stats,
            )
            if track_impacts:
                p_after = (
                    space_product(problem, d, hstate.assigned)
                    if out.consistent
                    else 0
                )
                observe_impact(impacts, x, a, p_before, p_after)
            found = out.consistent and dfs()
            hstate.assigned.discard(x)
            del assignment[x]
            d.restore(node)
            if found:
                return True
            on_failed_attempt()
            d.remove(x, a)
            if d.size(x) == 0:
                return False
            out = propagate(
                problem, d, cfg.scheme, cfg.policy,
                update_queue(problem, cfg.scheme, x, 1),
                hstate, stats,
            )
            if not out.consistent:
                return False
        return False

    use_restarts = cfg.mode != "count"
    run_index = 0
    while True:
        budget_left[0] = next_cutoff(cfg.restarts, run_index) if use_restarts else None
        try:
            found = dfs()
        except TimeoutError:
            return finish("timeout")
        except _CutoffReached:
            d.restore(root)
            assignment.clear()
            hstate.assigned.clear()
            stats.restarts += 1
            run_index += 1
            continue
        d.restore(root)
        if cfg.mode == "count":
            return finish("sat" if count > 0 else "unsat")
        return finish("sat" if found else "unsat")
