"""Closed-form bound evaluations and the shortest-path routing oracle.

The uncapacitated flow relaxation decomposes per origin-destination pair,
so its optimum is the demand-weighted sum of shortest-path costs.  The
closed form multiplies out those paths: ring hops up to k_n = floor(2/r_n)
subcenters away, the route through the center beyond that.

Note on the via-center count: multiplying out the shortest-path table
gives n - 2*k_n - 1 center-routed destinations per subcenter (the n - 1
foreign subcenters minus the 2*k_n ring-routed ones).  The closed form
here uses that count; it matches the routing oracle to machine precision
for every n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .city import CityInstance, CityParams, build_city, geometry_constants
from .model import UmcfpInstance, build_umcfp

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BoundSet:
    """Every closed-form quantity attached to one parameter set."""

    umcfp_opt: float  # T * Y * lambda
    lambda_val: float
    lambda_lo: float
    lambda_hi: float
    abs_gap_bound: float  # 2*mu*T*(1+r_n)*(n-1)
    op_cost_floor: float  # mu*T*(2ng + 2 + (n-1)*r_n)
    C_n_ag: float  # demand-dependent relative gap bound
    C_n: float  # demand-independent relative gap bound
    g_const: float  # (1+sqrt(2))/g
    kappa: float  # approximation factor 1 + g_const

    def as_dict(self) -> dict:
        return asdict(self)


def lambda_value(params: CityParams) -> float:
    """Scaled optimum of the uncapacitated flow relaxation; the optimum
    itself is T*Y*lambda."""
    r_n, k_n = geometry_constants(params.n)
    n, mu, K = params.n, params.mu, params.K
    ring_term = (k_n * (k_n + 1) * r_n + 2 * (n - 2 * k_n - 1)) / (n - 1)
    return ring_term * (mu / K + (1 - mu)) * (
        params.a * params.gamma + (1 - params.a) * params.tilde_gamma
    ) + (2 * mu / K + (1 - mu)) * (
        params.a * params.alpha + (1 - params.a) * params.tilde_alpha + params.g * params.a
    )


def lambda_sandwich(params: CityParams) -> tuple[float, float]:
    """Zone- and demand-independent bracket around lambda."""
    mu, K, g, a = params.mu, params.K, params.g, params.a
    lo = (1 + g * a - a) * ((2 - 2 / math.pi) * mu / K + 1 - mu)
    hi = 4 * (1 + g * a) * (2 * mu / K + 1 - mu)
    return lo, hi


def umcfp_optimum(params: CityParams) -> float:
    return params.T * params.Y * lambda_value(params)


def shortest_path_oracle(umcfp: UmcfpInstance) -> float:
    """Demand-weighted sum of cheapest routing costs, computed by a
    label-setting shortest-path run on the full graph (independent of the
    closed form)."""
    city = umcfp.city
    n_nodes = len(city.nodes)
    rows = [city.node_id(arc.tail) for arc in city.arcs]
    cols = [city.node_id(arc.head) for arc in city.arcs]
    graph = sp.csr_matrix((umcfp.cbar, (rows, cols)), shape=(n_nodes, n_nodes))
    sources = sorted({city.node_id(s) for (s, _t) in umcfp.demand})
    dist = dijkstra(graph, directed=True, indices=sources)
    row_of = {src: i for i, src in enumerate(sources)}
    total = 0.0
    for (s, t), amount in umcfp.demand.items():
        total += amount * dist[row_of[city.node_id(s)], city.node_id(t)]
    return float(total)


def shortest_path_oracle_for(params: CityParams, city: CityInstance | None = None) -> float:
    return shortest_path_oracle(build_umcfp(city or build_city(params)))


def gap_bounds(params: CityParams) -> BoundSet:
    """Evaluate the full bound family for one parameter set."""
    r_n, _ = geometry_constants(params.n)
    n, mu, T, Y, g = params.n, params.mu, params.T, params.Y, params.g
    lam = lambda_value(params)
    lam_lo, lam_hi = lambda_sandwich(params)
    ring_cap = 2 * (1 + r_n) / (2 * g + r_n)
    g_const = (1 + SQRT2) / g
    return BoundSet(
        umcfp_opt=T * Y * lam,
        lambda_val=lam,
        lambda_lo=lam_lo,
        lambda_hi=lam_hi,
        abs_gap_bound=2 * mu * T * (1 + r_n) * (n - 1),
        op_cost_floor=mu * T * (2 * n * g + 2 + (n - 1) * r_n),
        C_n_ag=min(2 * mu * (1 + r_n) * (n - 1) / (Y * lam), ring_cap),
        C_n=min(2 * mu * (1 + r_n) * (n - 1) / (Y * lam_lo), ring_cap),
        g_const=g_const,
        kappa=1 + g_const,
    )
