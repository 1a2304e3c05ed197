"""LP and MILP solving for the line-planning models.

The numerical engine is HiGHS via scipy (`linprog` for LPs, `milp` for
the branch-and-bound); both are deterministic for identical inputs.  An
external solver can be plugged in through the ``PARACITY_LP_BACKEND``
environment variable for cross-validation: the command is invoked with
the serialized LP file and an output path, and must write one
``name value`` pair per line.

`enumerate_symmetric_optimum` provides an independent oracle for the
3-variable symmetric model: exhaustive enumeration of the integer
frequencies, each paired with a routing LP.
"""

from __future__ import annotations

import enum
import itertools
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .city import CityInstance, ORBIT_PS, ORBIT_SP
from .model import ALPP, MilpModel, build_lp_relaxation, write_lp
from .symmetry import FrequencyPlan, RoutingFlow

FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6

BACKEND_ENV = "PARACITY_LP_BACKEND"


class SolveError(RuntimeError):
    """Deterministically reported numerical or backend failure."""


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    GAP_LIMIT = "GapLimit"
    ERROR = "Error"


@dataclass(frozen=True)
class Solution:
    status: SolveStatus
    model: MilpModel
    objective: float = float("nan")
    values: np.ndarray | None = None
    bound: float = float("nan")
    rel_gap: float = float("nan")
    nodes: int = 0
    wall_ms: float = 0.0
    message: str = ""

    @property
    def frequencies(self) -> np.ndarray:
        """Per-arc frequency values (orbit-expanded for symmetric models)."""
        if self.values is None:
            raise SolveError(f"no solution values (status {self.status.value})")
        return self.model.arc_frequencies(self.values)

    @property
    def flows(self) -> np.ndarray:
        if self.values is None:
            raise SolveError(f"no solution values (status {self.status.value})")
        return self.model.flow_matrix(self.values)


def max_violation(model: MilpModel, values: np.ndarray) -> float:
    """Largest absolute constraint/bound violation of a value vector."""
    viol = 0.0
    if model.A_ub.shape[0]:
        viol = max(viol, float(np.max(model.A_ub @ values - model.b_ub, initial=0.0)))
    if model.A_eq.shape[0]:
        viol = max(viol, float(np.max(np.abs(model.A_eq @ values - model.b_eq), initial=0.0)))
    viol = max(viol, float(np.max(model.lb - values, initial=0.0)))
    finite = np.isfinite(model.ub)
    if finite.any():
        viol = max(viol, float(np.max(values[finite] - model.ub[finite], initial=0.0)))
    return viol


def _constraints(model: MilpModel):
    cons = []
    if model.A_ub.shape[0]:
        cons.append(LinearConstraint(model.A_ub, -np.inf, model.b_ub))
    if model.A_eq.shape[0]:
        cons.append(LinearConstraint(model.A_eq, model.b_eq, model.b_eq))
    return cons


def _solve_external(model: MilpModel, command: str, wall0: float) -> Solution:
    with tempfile.TemporaryDirectory(prefix="paracity") as tmp:
        lp_path = os.path.join(tmp, "model.lp")
        sol_path = os.path.join(tmp, "model.sol")
        write_lp(model, lp_path)
        proc = subprocess.run(
            [*command.split(), lp_path, sol_path], capture_output=True, text=True
        )
        if proc.returncode == 2:
            return Solution(SolveStatus.INFEASIBLE, model, message="external backend: infeasible")
        if proc.returncode != 0:
            raise SolveError(f"external backend failed (rc={proc.returncode}): {proc.stderr.strip()}")
        by_name = {}
        with open(sol_path) as fh:
            for line in fh:
                if line.strip():
                    name, value = line.split()
                    by_name[name] = float(value)
    values = np.array([by_name.get(name, 0.0) for name in model.var_names])
    return Solution(
        status=SolveStatus.OPTIMAL,
        model=model,
        objective=float(model.c @ values) + model.c0,
        values=values,
        bound=float(model.c @ values) + model.c0,
        rel_gap=0.0,
        wall_ms=(time.perf_counter() - wall0) * 1e3,
    )


def solve_lp(model: MilpModel) -> Solution:
    """Solve a model without integrality requirements to optimality."""
    if model.integrality.any():
        raise ValueError("model has integer variables; use solve_milp or relax first")
    wall0 = time.perf_counter()
    if model.structural_infeasibility:
        return Solution(SolveStatus.INFEASIBLE, model, message=model.structural_infeasibility)
    backend = os.environ.get(BACKEND_ENV)
    if backend:
        return _solve_external(model, backend, wall0)
    res = linprog(
        model.c,
        A_ub=model.A_ub if model.A_ub.shape[0] else None,
        b_ub=model.b_ub if model.A_ub.shape[0] else None,
        A_eq=model.A_eq if model.A_eq.shape[0] else None,
        b_eq=model.b_eq if model.A_eq.shape[0] else None,
        bounds=np.column_stack([model.lb, model.ub]),
        method="highs",
    )
    wall_ms = (time.perf_counter() - wall0) * 1e3
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE, model, wall_ms=wall_ms, message=res.message)
    if res.status == 3:
        return Solution(SolveStatus.UNBOUNDED, model, wall_ms=wall_ms, message=res.message)
    if res.status != 0:
        return Solution(SolveStatus.ERROR, model, wall_ms=wall_ms, message=res.message)
    obj = float(res.fun) + model.c0
    return Solution(
        status=SolveStatus.OPTIMAL,
        model=model,
        objective=obj,
        values=np.asarray(res.x),
        bound=obj,
        rel_gap=0.0,
        wall_ms=wall_ms,
    )


def _tightened_integer_bounds(model: MilpModel) -> np.ndarray:
    """Valid lower bounds from integrality: every feasible integer plan
    carries at least ceil(Y*a/(n*K)) vehicles on each peripheral arc."""
    lb = model.lb.copy()
    if model.kind == ALPP:
        n = model.city.n
        f_p = model.city.params.peripheral_frequency
        for orbit in (ORBIT_SP, ORBIT_PS):
            lb[orbit * n: (orbit + 1) * n] = np.maximum(lb[orbit * n: (orbit + 1) * n], f_p)
    return lb


def solve_milp(
    model: MilpModel,
    gap_tol: float = 1e-4,
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> Solution:
    """Branch-and-bound solve of a mixed-integer model.

    Returns Optimal once the relative gap (incumbent - bound) /
    max(incumbent, 1e-12) is at most ``gap_tol``, GapLimit when a node or
    time limit strikes with an incumbent, Infeasible when no integer
    solution exists.
    """
    wall0 = time.perf_counter()
    if model.structural_infeasibility:
        return Solution(SolveStatus.INFEASIBLE, model, message=model.structural_infeasibility)
    if not model.integrality.any():
        return solve_lp(model)
    options: dict = {"mip_rel_gap": gap_tol}
    if node_limit is not None:
        options["node_limit"] = node_limit
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(
        c=model.c,
        constraints=_constraints(model),
        integrality=model.integrality,
        bounds=Bounds(_tightened_integer_bounds(model), model.ub),
        options=options,
    )
    wall_ms = (time.perf_counter() - wall0) * 1e3
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE, model, nodes=nodes, wall_ms=wall_ms, message=res.message)
    if res.status == 3:
        return Solution(SolveStatus.UNBOUNDED, model, nodes=nodes, wall_ms=wall_ms, message=res.message)
    if res.x is None:
        if res.status == 1:
            return Solution(SolveStatus.GAP_LIMIT, model, nodes=nodes, wall_ms=wall_ms, message=res.message)
        return Solution(SolveStatus.ERROR, model, nodes=nodes, wall_ms=wall_ms, message=res.message)
    obj = float(res.fun) + model.c0
    bound = float(getattr(res, "mip_dual_bound", res.fun)) + model.c0
    gap = (obj - bound) / max(abs(obj), 1e-12)
    status = SolveStatus.OPTIMAL if res.status == 0 else SolveStatus.GAP_LIMIT
    return Solution(
        status=status,
        model=model,
        objective=obj,
        values=np.asarray(res.x),
        bound=bound,
        rel_gap=gap,
        nodes=nodes,
        wall_ms=wall_ms,
        message=res.message,
    )


def extract_frequency_plan(sol: Solution, city: CityInstance) -> FrequencyPlan:
    """Integer per-arc frequencies of a solved model; symmetric solutions
    are expanded over their orbits."""
    if sol.status not in (SolveStatus.OPTIMAL, SolveStatus.GAP_LIMIT):
        raise SolveError(f"cannot extract plan from status {sol.status.value}")
    freqs = sol.frequencies
    rounded = np.rint(freqs)
    drift = np.max(np.abs(freqs - rounded))
    if drift > INTEGRALITY_TOL:
        raise SolveError(f"frequency deviates from integer by {drift:.3e}")
    return FrequencyPlan(city, rounded.astype(np.int64))


def extract_routing_flow(sol: Solution, city: CityInstance) -> RoutingFlow:
    return RoutingFlow(city, sol.flows.copy())


def enumerate_symmetric_optimum(
    model: MilpModel, cap: int | None = None
) -> tuple[float, tuple[int, int, int]] | None:
    """Brute-force oracle for the 3-variable symmetric model: try every
    (F_C, F_S+, F_S-) combination up to min(Lambda, cap), solving the
    routing LP with frequencies fixed.  Returns (objective, frequencies)
    or None when every combination is infeasible."""
    if model.kind == ALPP:
        raise ValueError("enumeration oracle only applies to the symmetric model")
    if model.structural_infeasibility:
        return None
    hi = int(model.ub[0]) if np.isfinite(model.ub[0]) else cap
    if cap is not None:
        hi = min(hi, cap) if hi is not None else cap
    if hi is None:
        raise ValueError("unbounded frequencies; pass an enumeration cap")
    best = None
    relaxed = build_lp_relaxation(model)
    for combo in itertools.product(range(hi + 1), repeat=3):
        lb = relaxed.lb.copy()
        ub = relaxed.ub.copy()
        lb[:3] = combo
        ub[:3] = combo
        sol = solve_lp(replace(relaxed, lb=lb, ub=ub))
        if sol.status is not SolveStatus.OPTIMAL:
            continue
        if best is None or sol.objective < best[0] - 1e-12:
            best = (sol.objective, combo)
    return best
