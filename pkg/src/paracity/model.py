"""Optimization model builders for the Parametric City.

Three models share one matrix container:

* the arc-based line-planning MILP with one integer frequency per arc,
* its symmetric restriction with just three integer variables (the
  peripheral frequency is a fixed constant),
* the LP relaxation of either.

Passenger routing is formulated as a per-origin multicommodity arc flow
(one commodity per periphery and per subcenter), which is equivalent to
the path formulation because costs are nonnegative and all constraints
act on arc totals.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .city import (
    CD,
    CityInstance,
    N_ORBITS,
    Node,
    ORBIT_CS,
    ORBIT_PS,
    ORBIT_SC,
    ORBIT_SP,
    ORBIT_SS_MINUS,
    ORBIT_SS_PLUS,
)

ALPP = "alpp"
ALPP3S = "alpps"

#: Frequency variable names of the symmetric model, in variable order.
SYM_FREQ_NAMES = ("F_C", "F_Splus", "F_Sminus")

#: Which symmetric frequency variable covers each orbit (None: fixed F_P).
SYM_ORBIT_VAR = {
    ORBIT_CS: 0,
    ORBIT_SC: 0,
    ORBIT_SS_PLUS: 1,
    ORBIT_SS_MINUS: 2,
    ORBIT_SP: None,
    ORBIT_PS: None,
}


@dataclass(frozen=True)
class MilpModel:
    """Immutable matrix form: minimize c@v + c0 subject to
    A_ub@v <= b_ub, A_eq@v = b_eq, lb <= v <= ub, v[integrality] integer."""

    kind: str  # "alpp" or "alpps"
    city: CityInstance
    c: np.ndarray
    c0: float
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    var_names: tuple[str, ...]
    n_freq: int
    relaxed: bool = False
    structural_infeasibility: str | None = None

    @property
    def n_vars(self) -> int:
        return self.c.size

    def flow_var(self, origin_id: int, arc_id: int) -> int:
        return self.n_freq + origin_id * len(self.city.arcs) + arc_id

    def flow_matrix(self, values: np.ndarray) -> np.ndarray:
        """Per-(origin, arc) flows of a solution vector."""
        n_arcs = len(self.city.arcs)
        return values[self.n_freq:].reshape(len(self.city.origins), n_arcs)

    def arc_frequencies(self, values: np.ndarray) -> np.ndarray:
        """Per-arc frequency values of a solution vector (symmetric models
        are expanded over their orbits, including the fixed peripheral
        constant)."""
        n = self.city.n
        if self.kind == ALPP:
            return values[: self.n_freq].copy()
        f_p = float(self.city.params.peripheral_frequency)
        out = np.empty(6 * n)
        for orbit in range(N_ORBITS):
            var = SYM_ORBIT_VAR[orbit]
            out[orbit * n: (orbit + 1) * n] = f_p if var is None else values[var]
        return out


def _flow_conservation(city: CityInstance, var_of_arc) -> tuple[list, list, list]:
    """COO triplets of the node-arc incidence rows, one row per node."""
    rows, cols, vals = [], [], []
    for a_id, arc in enumerate(city.arcs):
        rows.append(city.node_id(arc.tail))
        cols.append(var_of_arc(a_id))
        vals.append(1.0)
        rows.append(city.node_id(arc.head))
        cols.append(var_of_arc(a_id))
        vals.append(-1.0)
    return rows, cols, vals


def _commodity_rows(model_city: CityInstance, n_freq: int, row0: int):
    """Flow conservation per (origin, node) with supplies from the demand
    matrix; returns COO triplets and the right-hand side."""
    city = model_city
    n_arcs = len(city.arcs)
    n_nodes = len(city.nodes)
    origins = city.origins
    rows, cols, vals = [], [], []
    b = np.zeros(len(origins) * n_nodes)
    for o_id, origin in enumerate(origins):
        base = row0 + o_id * n_nodes
        for a_id, arc in enumerate(city.arcs):
            col = n_freq + o_id * n_arcs + a_id
            rows.append(base + city.node_id(arc.tail))
            cols.append(col)
            vals.append(1.0)
            rows.append(base + city.node_id(arc.head))
            cols.append(col)
            vals.append(-1.0)
        b[base - row0 + city.node_id(origin)] = city.supply(origin)
        for (s, t), amount in city.demand.items():
            if s == origin:
                b[base - row0 + city.node_id(t)] -= amount
    return rows, cols, vals, b


def _flow_objective(city: CityInstance) -> np.ndarray:
    mu = city.params.mu
    n_comm = len(city.origins)
    return (1.0 - mu) * np.tile(city.tau, n_comm)


def _var_names_flows(city: CityInstance) -> list[str]:
    return [f"x_{o.name}_{arc.name}" for o in city.origins for arc in city.arcs]


def build_alpp(city: CityInstance) -> MilpModel:
    """Arc-based line planning MILP: integer frequencies on all 6n arcs,
    frequency circulation, per-arc vehicle capacity, street capacity."""
    n = city.n
    params = city.params
    n_arcs = 6 * n
    n_comm = len(city.origins)
    n_nodes = len(city.nodes)
    n_vars = n_arcs + n_comm * n_arcs

    c = np.concatenate([params.mu * city.tau, _flow_objective(city)])

    # Equalities: frequency circulation, then per-commodity conservation.
    rows, cols, vals = _flow_conservation(city, lambda a: a)
    crows, ccols, cvals, b_comm = _commodity_rows(city, n_arcs, n_nodes)
    rows += crows
    cols += ccols
    vals += cvals
    b_eq = np.concatenate([np.zeros(n_nodes), b_comm])
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes + n_comm * n_nodes, n_vars))

    # Capacity: sum_o x[o,a] - K*F_a <= 0.
    rows, cols, vals = [], [], []
    for a_id in range(n_arcs):
        rows.append(a_id)
        cols.append(a_id)
        vals.append(-params.K)
        for o_id in range(n_comm):
            rows.append(a_id)
            cols.append(n_arcs + o_id * n_arcs + a_id)
            vals.append(1.0)
    A_ub = sp.csr_matrix((vals, (rows, cols)), shape=(n_arcs, n_vars))
    b_ub = np.zeros(n_arcs)

    lb = np.zeros(n_vars)
    ub = np.full(n_vars, np.inf)
    ub[:n_arcs] = params.effective_lambda
    integrality = np.zeros(n_vars, dtype=np.int64)
    integrality[:n_arcs] = 1

    names = tuple([f"F_{arc.name}" for arc in city.arcs] + _var_names_flows(city))
    return MilpModel(
        kind=ALPP,
        city=city,
        c=c,
        c0=0.0,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        lb=lb,
        ub=ub,
        integrality=integrality,
        var_names=names,
        n_freq=n_arcs,
    )


def build_alpp_sym(city: CityInstance) -> MilpModel:
    """Symmetric restriction with three integer variables F_C, F_S+, F_S-
    and the fixed peripheral frequency F_P = ceil(Y*a/(n*K)); capacity is
    grouped by arc orbit."""
    n = city.n
    params = city.params
    n_arcs = 6 * n
    n_comm = len(city.origins)
    n_nodes = len(city.nodes)
    n_freq = 3
    n_vars = n_freq + n_comm * n_arcs

    r_n = city.r_n
    kappa_c = 2 * n * params.T
    kappa_s = n * r_n * params.T
    kappa_p = 2 * n * params.T * params.g
    f_p = params.peripheral_frequency

    c = np.concatenate([params.mu * np.array([kappa_c, kappa_s, kappa_s]), _flow_objective(city)])
    c0 = params.mu * kappa_p * f_p

    rows, cols, vals, b_eq = _commodity_rows(city, n_freq, 0)
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(n_comm * n_nodes, n_vars))

    rows, cols, vals = [], [], []
    b_ub = np.zeros(n_arcs)
    for a_id in range(n_arcs):
        var = SYM_ORBIT_VAR[a_id // n]
        if var is None:
            b_ub[a_id] = params.K * f_p
        else:
            rows.append(a_id)
            cols.append(var)
            vals.append(-params.K)
        for o_id in range(n_comm):
            rows.append(a_id)
            cols.append(n_freq + o_id * n_arcs + a_id)
            vals.append(1.0)
    A_ub = sp.csr_matrix((vals, (rows, cols)), shape=(n_arcs, n_vars))

    lb = np.zeros(n_vars)
    ub = np.full(n_vars, np.inf)
    ub[:n_freq] = params.effective_lambda
    integrality = np.zeros(n_vars, dtype=np.int64)
    integrality[:n_freq] = 1

    infeasibility = None
    if f_p > params.effective_lambda:
        infeasibility = (
            f"peripheral frequency {f_p} exceeds street capacity Lambda={params.effective_lambda}"
        )

    names = tuple(list(SYM_FREQ_NAMES) + _var_names_flows(city))
    return MilpModel(
        kind=ALPP3S,
        city=city,
        c=c,
        c0=c0,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        lb=lb,
        ub=ub,
        integrality=integrality,
        var_names=names,
        n_freq=n_freq,
        structural_infeasibility=infeasibility,
    )


def build_lp_relaxation(model: MilpModel) -> MilpModel:
    """Same model with integrality dropped (frequencies continuous in
    [0, Lambda])."""
    return dataclasses.replace(model, integrality=np.zeros_like(model.integrality), relaxed=True)


@dataclass(frozen=True)
class UmcfpInstance:
    """Uncapacitated min-cost flow relaxation: per-arc routing costs that
    fold the vehicle cost of the forced empty return trips into the loaded
    direction (inbound peripheral and inbound central arcs carry a doubled
    mu/K term)."""

    city: CityInstance
    cbar: np.ndarray  # canonical arc order

    @property
    def demand(self) -> dict[tuple[Node, Node], float]:
        return self.city.demand


def build_umcfp(city: CityInstance) -> UmcfpInstance:
    params = city.params
    mu, K, T, g = params.mu, params.K, params.T, params.g
    r_n = city.r_n
    per_orbit = {
        ORBIT_PS: (2 * mu / K + (1 - mu)) * T * g,
        ORBIT_SP: (1 - mu) * T * g,
        ORBIT_SS_PLUS: (mu / K + (1 - mu)) * T * r_n,
        ORBIT_SS_MINUS: (mu / K + (1 - mu)) * T * r_n,
        ORBIT_SC: (2 * mu / K + (1 - mu)) * T,
        ORBIT_CS: (1 - mu) * T,
    }
    n = city.n
    cbar = np.empty(6 * n)
    for orbit in range(N_ORBITS):
        cbar[orbit * n: (orbit + 1) * n] = per_orbit[orbit]
    return UmcfpInstance(city=city, cbar=cbar)


def _lp_terms(coeffs, names) -> str:
    parts = []
    for coef, name in zip(coeffs, names):
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {abs(coef):.17g} {name}")
    if not parts:
        return "0 " + names[0]
    if parts[0].startswith("+"):
        parts[0] = parts[0][2:]
    return " ".join(parts)


def write_lp(model: MilpModel, path) -> None:
    """Serialize to CPLEX LP format for cross-checking against external
    solvers.  A constant objective offset is recorded as a comment (the
    format cannot express it)."""
    lines = [f"\\ {model.kind} model, {model.city.n} zones"]
    if model.c0:
        lines.append(f"\\ objective constant (add to reported optimum): {model.c0:.17g}")
    lines.append("Minimize")
    lines.append(" obj: " + _lp_terms(model.c, model.var_names))
    lines.append("Subject To")
    names = model.var_names
    for label, A, b, rel in (("eq", model.A_eq, model.b_eq, "="), ("ub", model.A_ub, model.b_ub, "<=")):
        A = A.tocsr()
        for i in range(A.shape[0]):
            row = A.getrow(i)
            terms = _lp_terms(row.data, [names[j] for j in row.indices])
            lines.append(f" {label}{i}: {terms} {rel} {b[i]:.17g}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        ub = "+inf" if np.isinf(model.ub[j]) else f"{model.ub[j]:.17g}"
        lines.append(f" {model.lb[j]:.17g} <= {name} <= {ub}")
    integers = [names[j] for j in range(model.n_vars) if model.integrality[j]]
    if integers:
        lines.append("Generals")
        lines.append(" " + " ".join(integers))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
