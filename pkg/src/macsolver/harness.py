"""Benchmark harness: configuration sweeps, CSV results, variance reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from dataclasses import dataclass
from pathlib import Path

from . import instances, model
from .heuristics import heuristic_name, parse_heuristic
from .propagation import POLICIES_BY_SCHEME
from .search import SearchConfig, parse_restarts, restarts_name, solve

log = logging.getLogger(__name__)

COLUMNS = (
    "instance",
    "scheme",
    "var_heur",
    "rev_heur",
    "restart",
    "value_order",
    "seed",
    "result",
    "time_ms",
    "nodes",
    "checks",
    "revisions",
    "dwos",
)

# revision policies whose node counts feed the ordering-dependence report
DEPENDENCY_POLICIES = ("fifo", "dom", "v_dom/wdeg")


@dataclass
class ResultRow:
    """One benchmark measurement; field order matches the CSV columns."""

    instance: str
    scheme: str
    var_heur: str
    rev_heur: str
    restart: str
    value_order: str
    seed: int | str
    result: str
    time_ms: float
    nodes: int | float
    checks: int | float
    revisions: int | float
    dwos: int | float

    def to_list(self) -> list:
        return [getattr(self, col) for col in COLUMNS]


@dataclass
class ExperimentSpec:
    """A sweep: instance sources crossed with configuration lists."""

    instances: tuple[str, ...]
    var_heurs: tuple[str, ...]
    schemes: tuple[str, ...] = ("variable",)
    rev_policies: tuple[str, ...] = ("fifo",)
    restarts: tuple[str, ...] = ("none",)
    value_orders: tuple[str, ...] = ("lex",)
    seeds: tuple[int, ...] = (0,)
    timeout: float = 3600.0

    def __post_init__(self) -> None:
        if not self.instances:
            raise ValueError("experiment needs at least one instance")
        if not self.var_heurs:
            raise ValueError("experiment needs at least one variable heuristic")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        doc = json.loads(text)
        known = {
            "instances",
            "var_heurs",
            "schemes",
            "rev_policies",
            "restarts",
            "value_orders",
            "seeds",
            "timeout",
        }
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown experiment field(s) {sorted(extra)}")
        kwargs = {}
        for name in known:
            if name not in doc:
                continue
            value = doc[name]
            kwargs[name] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)


def load_instance(source: str) -> model.Problem:
    """Resolve an instance source: generator spec string or file path."""
    if instances.is_spec(source):
        return instances.parse_spec(source)
    return model.load_problem(Path(source).read_text())


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Run the full cross product and return rows in deterministic order.

    Invalid scheme/policy pairs in the product are skipped with a warning.
    Random value-order configs get one row per seed plus an averaged row.
    """
    rows: list[ResultRow] = []
    for source in spec.instances:
        problem = load_instance(source)
        for scheme in spec.schemes:
            for var_heur in spec.var_heurs:
                for rev in spec.rev_policies:
                    if rev not in POLICIES_BY_SCHEME.get(scheme, ()):
                        log.warning(
                            "skipping %s with scheme %s (policy does not fit)",
                            rev,
                            scheme,
                        )
                        continue
                    for restart in spec.restarts:
                        for value_order in spec.value_orders:
                            group = []
                            for seed in spec.seeds:
                                cfg = SearchConfig(
                                    heuristic=parse_heuristic(var_heur, probe_seed=seed),
                                    scheme=scheme,
                                    policy=rev,
                                    restarts=parse_restarts(restart),
                                    value_order=value_order,
                                    seed=seed,
                                    mode="decide",
                                    timeout=spec.timeout,
                                )
                                outcome = solve(problem, cfg)
                                row = ResultRow(
                                    instance=problem.name,
                                    scheme=scheme,
                                    var_heur=var_heur,
                                    rev_heur=rev,
                                    restart=restart,
                                    value_order=value_order,
                                    seed=seed,
                                    result=outcome.result,
                                    time_ms=outcome.stats.time_ms,
                                    nodes=outcome.stats.nodes,
                                    checks=outcome.stats.checks,
                                    revisions=outcome.stats.revisions,
                                    dwos=outcome.stats.dwos,
                                )
                                group.append(row)
                            rows.extend(group)
                            if value_order == "rand" and len(group) > 1:
                                rows.append(_averaged(group))
    return rows


def _averaged(group: list[ResultRow]) -> ResultRow:
    """Arithmetic mean of a per-seed group, reported with seed='avg'."""
    results = {r.result for r in group}
    mean = lambda attr: sum(getattr(r, attr) for r in group) / len(group)
    return ResultRow(
        instance=group[0].instance,
        scheme=group[0].scheme,
        var_heur=group[0].var_heur,
        rev_heur=group[0].rev_heur,
        restart=group[0].restart,
        value_order=group[0].value_order,
        seed="avg",
        result=results.pop() if len(results) == 1 else "mixed",
        time_ms=mean("time_ms"),
        nodes=mean("nodes"),
        checks=mean("checks"),
        revisions=mean("revisions"),
        dwos=mean("dwos"),
    )


def write_csv(rows: list[ResultRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        _write_csv(rows, fh)


def csv_text(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    _write_csv(rows, buf)
    return buf.getvalue()


def _write_csv(rows: list[ResultRow], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.to_list())


def _num(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv(path: str | Path) -> list[ResultRow]:
    """Parse rows back from a CSV file produced by write_csv."""
    return read_csv_text(Path(path).read_text())


def read_csv_text(text: str) -> list[ResultRow]:
    """Parse rows back from CSV text produced by csv_text/write_csv."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        data = dict(zip(COLUMNS, rec))
        rows.append(
            ResultRow(
                instance=data["instance"],
                scheme=data["scheme"],
                var_heur=data["var_heur"],
                rev_heur=data["rev_heur"],
                restart=data["restart"],
                value_order=data["value_order"],
                seed=data["seed"] if data["seed"] == "avg" else int(data["seed"]),
                result=data["result"],
                time_ms=float(data["time_ms"]),
                nodes=_num(data["nodes"]),
                checks=_num(data["checks"]),
                revisions=_num(data["revisions"]),
                dwos=_num(data["dwos"]),
            )
        )
    return rows


def format_table(rows: list[ResultRow]) -> str:
    """Human-readable aligned table of result rows."""
    cells = [list(map(str, COLUMNS))]
    for row in rows:
        cells.append(
            [
                f"{v:.1f}" if isinstance(v, float) else str(v)
                for v in row.to_list()
            ]
        )
    widths = [max(len(line[i]) for line in cells) for i in range(len(COLUMNS))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
        for line in cells
    ]
    return "\n".join(lines)


def variance(values: list) -> float:
    """Population variance (mean squared deviation from the mean)."""
    if not values:
        raise ValueError("variance of an empty list")
    return statistics.pvariance(values)


def dependency_report(rows: list[ResultRow]) -> list[tuple[str, str, float]]:
    """Node-count variance per (instance, variable heuristic).

    For each group, takes one node count per revision policy in
    DEPENDENCY_POLICIES (the per-policy mean when several seeds are present)
    and reports the population variance across the three. Groups missing a
    policy are skipped with a warning.
    """
    by_group: dict[tuple[str, str], dict[str, list[float]]] = {}
    for row in rows:
        if row.seed == "avg" or row.rev_heur not in DEPENDENCY_POLICIES:
            continue
        cell = by_group.setdefault((row.instance, row.var_heur), {})
        cell.setdefault(row.rev_heur, []).append(float(row.nodes))
    report = []
    for (instance, var_heur), cell in by_group.items():
        missing = [p for p in DEPENDENCY_POLICIES if p not in cell]
        if missing:
            log.warning(
                "dependency report: %s / %s missing %s, skipped",
                instance,
                var_heur,
                ", ".join(missing),
            )
            continue
        points = [statistics.fmean(cell[p]) for p in DEPENDENCY_POLICIES]
        report.append((instance, var_heur, variance(points)))
    return report
