"""Rotation-based solution analysis.

Frequency plans and routing flows live on the canonical arc order of the
city, so rotating a plan is an index shift within each of the six arc
orbits.  The central constructions: averaging the n rotated copies of a
feasible solution (and rounding the frequencies up) yields a feasible
arc-symmetric solution with unchanged user cost; conversely a symmetric
flow induces a symmetric plan that is no more expensive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .city import (
    CityInstance,
    N_ORBITS,
    ORBIT_CS,
    ORBIT_PS,
    ORBIT_SC,
    ORBIT_SP,
    ORBIT_SS_MINUS,
    ORBIT_SS_PLUS,
    guarded_ceil,
)

if TYPE_CHECKING:  # pragma: no cover
    from .solver import Solution

FEASIBILITY_TOL = 1e-7

#: Relative objective difference below which near-ties must be re-solved
#: to proven optimality before classifying.
CLASSIFICATION_TOL = 1e-6


class InfeasibleSolutionError(ValueError):
    """An input solution violates the model constraints."""


@dataclass(frozen=True)
class FrequencyPlan:
    """Integer vehicle frequencies per arc, canonical arc order."""

    city: CityInstance
    F: np.ndarray

    def __post_init__(self):
        if self.F.shape != (6 * self.city.n,):
            raise ValueError(f"expected {6 * self.city.n} arc frequencies, got {self.F.shape}")

    def rotated(self, z: int) -> "FrequencyPlan":
        n = self.city.n
        out = np.empty_like(self.F)
        for orbit in range(N_ORBITS):
            out[orbit * n: (orbit + 1) * n] = np.roll(self.F[orbit * n: (orbit + 1) * n], z)
        return FrequencyPlan(self.city, out)

    def orbit(self, orbit: int) -> np.ndarray:
        n = self.city.n
        return self.F[orbit * n: (orbit + 1) * n]

    def operator_cost(self) -> float:
        return float(self.city.tau @ self.F)

    def conservation_violation(self) -> int:
        """Largest absolute net outflow over all nodes (0 for circulations)."""
        worst = 0
        for v in self.city.nodes:
            net = 0
            for a_id, arc in enumerate(self.city.arcs):
                if arc.tail == v:
                    net += int(self.F[a_id])
                elif arc.head == v:
                    net -= int(self.F[a_id])
            worst = max(worst, abs(net))
        return worst


@dataclass(frozen=True)
class RoutingFlow:
    """Passenger flow per (origin commodity, arc)."""

    city: CityInstance
    x: np.ndarray  # shape (2n, 6n)

    def __post_init__(self):
        n = self.city.n
        if self.x.shape != (2 * n, 6 * n):
            raise ValueError(f"expected flow shape {(2 * n, 6 * n)}, got {self.x.shape}")

    def arc_totals(self) -> np.ndarray:
        return self.x.sum(axis=0)

    def user_cost(self) -> float:
        """Unweighted travel length sum over all passengers."""
        return float(self.city.tau @ self.arc_totals())

    def rotated(self, z: int) -> "RoutingFlow":
        city = self.city
        out = np.empty_like(self.x)
        for o in range(self.x.shape[0]):
            ro = city.rotate_origin_id(o, z)
            for orbit in range(N_ORBITS):
                n = city.n
                out[ro, orbit * n: (orbit + 1) * n] = np.roll(
                    self.x[o, orbit * n: (orbit + 1) * n], z
                )
        return RoutingFlow(city, out)


@dataclass(frozen=True)
class SymmetricFrequencies:
    """The four orbit values of an arc-symmetric plan."""

    F_P: int
    F_C: int
    F_Splus: int
    F_Sminus: int

    def expand(self, city: CityInstance) -> FrequencyPlan:
        per_orbit = {
            ORBIT_CS: self.F_C,
            ORBIT_SC: self.F_C,
            ORBIT_SS_PLUS: self.F_Splus,
            ORBIT_SS_MINUS: self.F_Sminus,
            ORBIT_SP: self.F_P,
            ORBIT_PS: self.F_P,
        }
        n = city.n
        F = np.empty(6 * n, dtype=np.int64)
        for orbit, value in per_orbit.items():
            F[orbit * n: (orbit + 1) * n] = value
        return FrequencyPlan(city, F)


def total_cost(plan: FrequencyPlan, flow: RoutingFlow) -> float:
    mu = plan.city.params.mu
    return mu * plan.operator_cost() + (1 - mu) * flow.user_cost()


def check_feasible(plan: FrequencyPlan, flow: RoutingFlow, tol: float = FEASIBILITY_TOL) -> None:
    """Raise InfeasibleSolutionError if (plan, flow) violates any model
    constraint by more than ``tol``, scaled by the constraint activity
    (capacities run to thousands of passengers, where solver output is
    only accurate to the relative feasibility tolerance)."""
    city = plan.city
    params = city.params
    if np.any(plan.F < 0):
        raise InfeasibleSolutionError("negative frequency")
    if np.any(plan.F > params.effective_lambda + tol):
        raise InfeasibleSolutionError("street capacity Lambda exceeded")
    if plan.conservation_violation() > 0:
        raise InfeasibleSolutionError("frequency plan is not a circulation")
    if np.any(flow.x < -tol * max(1.0, float(np.max(np.abs(flow.x))))):
        raise InfeasibleSolutionError("negative passenger flow")
    capacity = params.K * plan.F
    excess = flow.arc_totals() - capacity
    if np.any(excess > tol * np.maximum(1.0, capacity)):
        raise InfeasibleSolutionError(f"vehicle capacity exceeded by {np.max(excess):.3e}")
    demand_at = {}
    for (s, t), amount in city.demand.items():
        demand_at[city.origin_id(s), city.node_id(t)] = amount
    for o_id, origin in enumerate(city.origins):
        net = np.zeros(len(city.nodes))
        for a_id, arc in enumerate(city.arcs):
            net[city.node_id(arc.tail)] += flow.x[o_id, a_id]
            net[city.node_id(arc.head)] -= flow.x[o_id, a_id]
        expected = np.zeros(len(city.nodes))
        expected[city.node_id(origin)] = city.supply(origin)
        for (o, v), amount in demand_at.items():
            if o == o_id:
                expected[v] -= amount
        if np.max(np.abs(net - expected)) > tol * max(1.0, city.supply(origin)):
            raise InfeasibleSolutionError(
                f"flow conservation violated for origin {origin.name} "
                f"by {np.max(np.abs(net - expected)):.3e}"
            )


def average_rotations(flow: RoutingFlow) -> RoutingFlow:
    n = flow.city.n
    acc = np.zeros_like(flow.x)
    for z in range(n):
        acc += flow.rotated(z).x
    return RoutingFlow(flow.city, acc / n)


def symmetrize(
    plan: FrequencyPlan, flow: RoutingFlow, city: CityInstance | None = None
) -> tuple[FrequencyPlan, RoutingFlow]:
    """Feasible arc-symmetric solution from any feasible solution: orbit
    averages of the frequencies rounded up, flows averaged over all n
    rotations.  User cost is unchanged."""
    city = city or plan.city
    check_feasible(plan, flow)
    n = city.n
    F_s = np.empty_like(plan.F)
    for orbit in range(N_ORBITS):
        orbit_sum = int(plan.orbit(orbit).sum())
        F_s[orbit * n: (orbit + 1) * n] = -((-orbit_sum) // n)  # exact ceil(sum/n)
    sym_plan = FrequencyPlan(city, F_s)
    sym_flow = average_rotations(flow)
    check_feasible(sym_plan, sym_flow)
    return sym_plan, sym_flow


def is_arc_symmetric(plan: FrequencyPlan) -> bool:
    return all(np.all(plan.orbit(orbit) == plan.orbit(orbit)[0]) for orbit in range(N_ORBITS))


def to_symmetric_frequencies(plan: FrequencyPlan) -> SymmetricFrequencies:
    if not is_arc_symmetric(plan):
        raise ValueError("plan is not arc-symmetric")
    return SymmetricFrequencies(
        F_P=int(plan.orbit(ORBIT_PS)[0]),
        F_C=int(plan.orbit(ORBIT_SC)[0]),
        F_Splus=int(plan.orbit(ORBIT_SS_PLUS)[0]),
        F_Sminus=int(plan.orbit(ORBIT_SS_MINUS)[0]),
    )


def symmetric_flow_from_symmetric_plan(plan: FrequencyPlan, flow: RoutingFlow) -> RoutingFlow:
    """Rotation-invariant flow for an arc-symmetric plan, same cost."""
    if not is_arc_symmetric(plan):
        raise ValueError("plan is not arc-symmetric")
    check_feasible(plan, flow)
    sym_flow = average_rotations(flow)
    check_feasible(plan, sym_flow)
    return sym_flow


def is_flow_symmetric(flow: RoutingFlow, tol: float = 1e-9) -> bool:
    """Rotation invariance of the per-commodity arc aggregates."""
    base = flow.x
    scale = max(1.0, float(np.max(np.abs(base))))
    for z in range(1, flow.city.n):
        if np.max(np.abs(flow.rotated(z).x - base)) > tol * scale:
            return False
    return True


def symmetric_plan_from_symmetric_flow(
    flow: RoutingFlow, plan: FrequencyPlan, city: CityInstance | None = None
) -> FrequencyPlan:
    """Symmetric plan covering a rotation-invariant flow, never costlier
    than the plan it replaces."""
    city = city or plan.city
    if not is_flow_symmetric(flow):
        raise ValueError("flow is not rotation-invariant")
    check_feasible(plan, flow)
    K = city.params.K
    totals = flow.arc_totals()
    n = city.n
    sf = SymmetricFrequencies(
        F_P=int(plan.F[ORBIT_PS * n]),
        F_Splus=guarded_ceil(totals[ORBIT_SS_PLUS * n] / K),
        F_Sminus=guarded_ceil(totals[ORBIT_SS_MINUS * n] / K),
        F_C=guarded_ceil(totals[ORBIT_SC * n] / K),
    )
    sym_plan = sf.expand(city)
    check_feasible(sym_plan, flow)
    return sym_plan


class Classification(enum.Enum):
    SYMMETRIC = "Symmetric"
    ASYMMETRIC = "Asymmetric"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class GapReport:
    opt_alpp: float
    opt_alpps: float
    gamma_abs: float
    gamma_rel: float
    classification: Classification

    def as_dict(self) -> dict:
        return {
            "opt_alpp": self.opt_alpp,
            "opt_alpps": self.opt_alpps,
            "gamma_abs": self.gamma_abs,
            "gamma_rel": self.gamma_rel,
            "classification": self.classification.value,
        }


def symmetry_gap(opt_alpp: "Solution", opt_alpps: "Solution") -> GapReport:
    """Absolute and relative excess of the best symmetric objective over
    the overall optimum, with a Symmetric/Asymmetric/Infeasible verdict."""
    from .solver import SolveStatus

    if opt_alpp.model.city.params != opt_alpps.model.city.params:
        raise ValueError("solutions belong to different city instances")
    a_inf = opt_alpp.status is SolveStatus.INFEASIBLE
    s_inf = opt_alpps.status is SolveStatus.INFEASIBLE
    if a_inf and s_inf:
        return GapReport(float("nan"), float("nan"), 0.0, 0.0, Classification.INFEASIBLE)
    if a_inf != s_inf:
        raise ValueError(
            "one-sided infeasibility: the general and symmetric models must "
            "be feasible or infeasible together"
        )
    for sol in (opt_alpp, opt_alpps):
        if sol.status is not SolveStatus.OPTIMAL:
            raise ValueError(f"expected Optimal solutions, got {sol.status.value}")
    gamma_abs = opt_alpps.objective - opt_alpp.objective
    gamma_rel = gamma_abs / opt_alpp.objective
    verdict = (
        Classification.SYMMETRIC if gamma_rel <= CLASSIFICATION_TOL else Classification.ASYMMETRIC
    )
    return GapReport(opt_alpp.objective, opt_alpps.objective, gamma_abs, gamma_rel, verdict)
