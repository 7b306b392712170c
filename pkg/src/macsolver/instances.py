"""Benchmark instance generators.

All generators are deterministic per seed and emit Problem objects that
round-trip through the JSON instance format unchanged.
"""

from __future__ import annotations

import random
from itertools import combinations

from .model import Constraint, Problem


def gen_model_d(n: int, d: int, e: int, t: float, seed: int) -> Problem:
    """Random binary CSP: e distinct constrained pairs, tuple-wise tightness t.

    Each constraint scope is an unordered variable pair drawn uniformly
    without replacement; each of the d*d value pairs is forbidden
    independently with probability t.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if not 0.0 <= t <= 1.0:
        raise ValueError("tightness t must be in [0, 1]")
    max_pairs = n * (n - 1) // 2
    if not 0 <= e <= max_pairs:
        raise ValueError(f"e must be in [0, {max_pairs}] for n={n}")
    rng = random.Random(seed)
    variables = tuple(f"x{i}" for i in range(n))
    domains = {x: tuple(range(d)) for x in variables}
    pairs = rng.sample(list(combinations(range(n), 2)), e)
    constraints = []
    for idx, (i, j) in enumerate(pairs):
        forbidden = frozenset(
            (a, b) for a in range(d) for b in range(d) if rng.random() < t
        )
        constraints.append(
            Constraint(
                id=f"c{idx}",
                scope=(variables[i], variables[j]),
                kind="forbidden",
                tuples=forbidden,
            )
        )
    return Problem(
        name=f"modelD-{n}-{d}-{e}-{t}-{seed}",
        variables=variables,
        domains=domains,
        constraints=tuple(constraints),
    )


def gen_model_rb(n: int, d: int, e: int, t: float, seed: int) -> Problem:
    """Forced-satisfiable random binary CSP.

    A full assignment is planted first; tuples consistent with it are never
    forbidden, so the planted assignment survives in every instance.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if not 0.0 <= t <= 1.0:
        raise ValueError("tightness t must be in [0, 1]")
    max_pairs = n * (n - 1) // 2
    if not 0 <= e <= max_pairs:
        raise ValueError(f"e must be in [0, {max_pairs}] for n={n}")
    rng = random.Random(seed)
    variables = tuple(f"x{i}" for i in range(n))
    domains = {x: tuple(range(d)) for x in variables}
    planted = [rng.randrange(d) for _ in range(n)]
    pairs = rng.sample(list(combinations(range(n), 2)), e)
    constraints = []
    for idx, (i, j) in enumerate(pairs):
        keep = (planted[i], planted[j])
        forbidden = frozenset(
            (a, b)
            for a in range(d)
            for b in range(d)
            if (a, b) != keep and rng.random() < t
        )
        constraints.append(
            Constraint(
                id=f"c{idx}",
                scope=(variables[i], variables[j]),
                kind="forbidden",
                tuples=forbidden,
            )
        )
    return Problem(
        name=f"modelRB-{n}-{d}-{e}-{t}-{seed}",
        variables=variables,
        domains=domains,
        constraints=tuple(constraints),
    )


def gen_langford(k: int, n: int) -> Problem:
    """Position encoding of the Langford pairing problem L(k, n).

    One variable per occurrence of each of the n values, ranging over the
    k*n sequence positions; all positions pairwise distinct; occurrence j+1 of
    value index i sits exactly i+2 positions after occurrence j (one binary
    allowed-tuple table per consecutive occurrence pair).
    """
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 and n >= 1")
    size = k * n
    variables = tuple(f"p{i}_{j}" for i in range(n) for j in range(k))
    domains = {x: tuple(range(size)) for x in variables}
    constraints = []
    cid = 0
    for a, b in combinations(variables, 2):
        constraints.append(
            Constraint(id=f"c{cid}", scope=(a, b), kind="predicate", pred="ne")
        )
        cid += 1
    for i in range(n):
        gap = i + 2
        table = frozenset((q, q + gap) for q in range(size - gap))
        for j in range(k - 1):
            constraints.append(
                Constraint(
                    id=f"c{cid}",
                    scope=(f"p{i}_{j}", f"p{i}_{j + 1}"),
                    kind="allowed",
                    tuples=table,
                )
            )
            cid += 1
    return Problem(
        name=f"langford-{k}-{n}",
        variables=variables,
        domains=domains,
        constraints=tuple(constraints),
    )


def gen_queens(n: int) -> Problem:
    """n queens, one variable per column: distinct rows, no shared diagonal."""
    if n < 1:
        raise ValueError("need n >= 1")
    variables = tuple(f"q{i}" for i in range(n))
    domains = {x: tuple(range(n)) for x in variables}
    constraints = []
    cid = 0
    for i, j in combinations(range(n), 2):
        constraints.append(
            Constraint(
                id=f"c{cid}",
                scope=(variables[i], variables[j]),
                kind="predicate",
                pred="ne",
            )
        )
        cid += 1
        constraints.append(
            Constraint(
                id=f"c{cid}",
                scope=(variables[i], variables[j]),
                kind="predicate",
                pred="dist_ne",
                k=j - i,
            )
        )
        cid += 1
    return Problem(
        name=f"queens-{n}",
        variables=variables,
        domains=domains,
        constraints=tuple(constraints),
    )


def gen_chessboard(rows: int, cols: int, colors: int) -> Problem:
    """Board coloration: no axis-aligned rectangle with four same-color corners.

    One 4-ary forbidden table per rectangle (row pair x column pair).
    """
    if rows < 2 or cols < 2 or colors < 1:
        raise ValueError("need rows >= 2, cols >= 2, colors >= 1")
    variables = tuple(f"s{r}_{c}" for r in range(rows) for c in range(cols))
    domains = {x: tuple(range(colors)) for x in variables}
    same = frozenset((a, a, a, a) for a in range(colors))
    constraints = []
    cid = 0
    for r1, r2 in combinations(range(rows), 2):
        for c1, c2 in combinations(range(cols), 2):
            scope = (f"s{r1}_{c1}", f"s{r1}_{c2}", f"s{r2}_{c1}", f"s{r2}_{c2}")
            constraints.append(
                Constraint(id=f"c{cid}", scope=scope, kind="forbidden", tuples=same)
            )
            cid += 1
    return Problem(
        name=f"cc-{rows}-{cols}-{colors}",
        variables=variables,
        domains=domains,
        constraints=tuple(constraints),
    )


_FAMILIES = {
    "modeld": (gen_model_d, ("n", "d", "e", "t", "seed")),
    "modelrb": (gen_model_rb, ("n", "d", "e", "t", "seed")),
    "langford": (gen_langford, ("k", "n")),
    "queens": (gen_queens, ("n",)),
    "chessboard": (gen_chessboard, ("rows", "cols", "colors")),
}


def parse_spec(text: str) -> Problem:
    """Build an instance from a spec string like "modelD:n=8,d=4,e=12,t=0.3,seed=1"."""
    family, sep, args = text.partition(":")
    key = family.lower()
    if not sep or key not in _FAMILIES:
        raise ValueError(f"unknown generator spec {text!r}")
    fn, param_names = _FAMILIES[key]
    params: dict[str, float | int] = {}
    for piece in filter(None, args.split(",")):
        name, eq, raw = piece.partition("=")
        name = name.strip()
        if not eq or name not in param_names:
            raise ValueError(f"bad generator parameter {piece!r} in {text!r}")
        raw = raw.strip()
        params[name] = float(raw) if name == "t" else int(raw)
    if "seed" in param_names:
        params.setdefault("seed", 0)
    missing = [p for p in param_names if p not in params]
    if missing:
        raise ValueError(f"generator spec {text!r} missing {missing}")
    return fn(**params)


def is_spec(text: str) -> bool:
    """True when text looks like a generator spec rather than a file path."""
    family = text.partition(":")[0].lower()
    return family in _FAMILIES and ":" in text
