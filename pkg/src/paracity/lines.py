"""Lines: conversion between arc circulations and line plans, and the
symmetric line-planning approximation algorithm.

A line is a simple directed cycle operated at an integer frequency;
antiparallel two-node cycles are the pendulum lines.  Aggregating line
frequencies over arcs gives a circulation, and any integer circulation
decomposes back into lines of equal total cost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .city import CD, CityInstance, CityParams, Node, SC_KIND, P_KIND, build_city
from .model import build_alpp_sym
from .symmetry import FrequencyPlan, RoutingFlow, SymmetricFrequencies, to_symmetric_frequencies


@dataclass(frozen=True)
class Line:
    """Simple directed cycle, stored without repeating the closing node."""

    nodes: tuple[Node, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a line needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("line cycle is not simple")

    def arcs(self):
        from .city import Arc

        return tuple(
            Arc(self.nodes[i], self.nodes[(i + 1) % len(self.nodes)])
            for i in range(len(self.nodes))
        )

    def length(self, city: CityInstance) -> float:
        return float(sum(city.tau[city.arc_index[a]] for a in self.arcs()))


@dataclass(frozen=True)
class LinePlan:
    """Multiset of lines with positive integer frequencies."""

    entries: tuple[tuple[Line, int], ...]

    def aggregate(self, city: CityInstance) -> FrequencyPlan:
        F = np.zeros(6 * city.n, dtype=np.int64)
        for line, freq in self.entries:
            for arc in line.arcs():
                F[city.arc_index[arc]] += freq
        return FrequencyPlan(city, F)

    def total_length_cost(self, city: CityInstance) -> float:
        return float(sum(line.length(city) * freq for line, freq in self.entries))

    def as_json(self, city: CityInstance) -> list[dict]:
        return [
            {
                "nodes": [node.name for node in line.nodes],
                "frequency": int(freq),
                "length": line.length(city),
            }
            for line, freq in self.entries
        ]


def decompose_circulation(plan: FrequencyPlan) -> LinePlan:
    """Split an integer circulation into simple cycles whose aggregated
    frequencies reproduce it exactly.

    Deterministic: arcs are scanned in canonical order and the walk always
    follows the first outgoing arc with remaining frequency, extracting
    the maximum feasible frequency along each cycle found.
    """
    city = plan.city
    if plan.conservation_violation() > 0:
        raise ValueError("frequency plan is not a circulation")
    residual = plan.F.astype(np.int64).copy()
    out_arcs: dict[Node, list[int]] = {}
    for a_id, arc in enumerate(city.arcs):
        out_arcs.setdefault(arc.tail, []).append(a_id)

    entries: list[tuple[Line, int]] = []
    while True:
        start = next((a for a in range(residual.size) if residual[a] > 0), None)
        if start is None:
            break
        walk_arcs = [start]
        walk_nodes = [city.arcs[start].tail, city.arcs[start].head]
        seen = {walk_nodes[0]: 0, walk_nodes[1]: 1}
        while True:
            current = walk_nodes[-1]
            a_id = next(a for a in out_arcs[current] if residual[a] > 0)
            walk_arcs.append(a_id)
            nxt = city.arcs[a_id].head
            walk_nodes.append(nxt)
            if nxt in seen:
                break
            seen[nxt] = len(walk_nodes) - 1
        first = seen[walk_nodes[-1]]
        cycle_arcs = walk_arcs[first:]
        cycle_nodes = tuple(walk_nodes[first:-1])
        freq = int(residual[cycle_arcs].min())
        residual[cycle_arcs] -= freq
        entries.append((Line(cycle_nodes), freq))
    return LinePlan(tuple(entries))


def canonical_symmetric_lineplan(sf: SymmetricFrequencies, city: CityInstance) -> LinePlan:
    """Minimal orbit-uniform plan realizing four symmetric frequencies:
    peripheral and central pendulum lines plus one full ring per rotation
    direction; zero-frequency entries are omitted."""
    n = city.n
    entries: list[tuple[Line, int]] = []
    if sf.F_P > 0:
        for i in range(n):
            entries.append((Line((Node(P_KIND, i), Node(SC_KIND, i))), sf.F_P))
    if sf.F_C > 0:
        for i in range(n):
            entries.append((Line((Node(SC_KIND, i), CD)), sf.F_C))
    if sf.F_Splus > 0:
        entries.append((Line(tuple(Node(SC_KIND, i) for i in range(n))), sf.F_Splus))
    if sf.F_Sminus > 0:
        entries.append((Line(tuple(Node(SC_KIND, (n - i) % n) for i in range(n))), sf.F_Sminus))
    return LinePlan(tuple(entries))


class LpaStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class LpaResult:
    status: LpaStatus
    objective: float = float("nan")
    line_plan: LinePlan | None = None
    flow: RoutingFlow | None = None
    frequencies: SymmetricFrequencies | None = None


def lpa(params: CityParams, gap_tol: float = 1e-4) -> LpaResult:
    """Approximation algorithm: solve the symmetric restriction, emit its
    canonical symmetric line plan and routing.  For fixed g the cost is
    within a factor 1 + (1+sqrt(2))/g of the unrestricted optimum."""
    from .solver import SolveStatus, extract_frequency_plan, extract_routing_flow, solve_milp

    city = build_city(params)
    sol = solve_milp(build_alpp_sym(city), gap_tol=gap_tol)
    if sol.status is SolveStatus.INFEASIBLE:
        return LpaResult(LpaStatus.INFEASIBLE)
    if sol.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"symmetric model solve ended with {sol.status.value}: {sol.message}")
    sf = to_symmetric_frequencies(extract_frequency_plan(sol, city))
    return LpaResult(
        status=LpaStatus.OPTIMAL,
        objective=sol.objective,
        line_plan=canonical_symmetric_lineplan(sf, city),
        flow=extract_routing_flow(sol, city),
        frequencies=sf,
    )
