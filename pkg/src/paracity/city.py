"""Parametric City construction: graph, arc lengths, demand, rotations.

The city is a helm graph with a central business district ``CD``, ``n``
subcenters ``SC_i`` on a ring of radius ``T`` and one periphery ``P_i``
behind each subcenter at distance ``g*T``.  All 3n street segments carry
a pair of antiparallel arcs.  Rotation by ``z`` zones acts on node
indices modulo ``n``; all geometry and demand are invariant under it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

CD_KIND = "CD"
SC_KIND = "SC"
P_KIND = "P"

#: Orbit layout of the 6n arcs, in canonical order.  Arc index = orbit*n + i.
ORBIT_CS = 0  # CD -> SC_i
ORBIT_SS_PLUS = 1  # SC_i -> SC_{i+1} (counterclockwise)
ORBIT_SS_MINUS = 2  # SC_i -> SC_{i-1} (clockwise)
ORBIT_SP = 3  # SC_i -> P_i
ORBIT_PS = 4  # P_i -> SC_i
ORBIT_SC = 5  # SC_i -> CD
N_ORBITS = 6


class ValidationError(ValueError):
    """A city parameter violates one of its invariants."""


class Node(NamedTuple):
    kind: str  # "CD", "SC" or "P"
    index: int  # zone index in Z/nZ, 0 for CD

    @property
    def name(self) -> str:
        return "CD" if self.kind == CD_KIND else f"{self.kind}{self.index}"

    @staticmethod
    def from_name(name: str) -> "Node":
        if name == "CD":
            return CD
        if name.startswith("SC"):
            return Node(SC_KIND, int(name[2:]))
        if name.startswith("P"):
            return Node(P_KIND, int(name[1:]))
        raise ValueError(f"not a node name: {name!r}")


CD = Node(CD_KIND, 0)


class Arc(NamedTuple):
    tail: Node
    head: Node

    @property
    def name(self) -> str:
        return f"{self.tail.name}_{self.head.name}"


def guarded_ceil(x: float, eps: float = 1e-9) -> int:
    """Ceiling that forgives values a hair above an integer."""
    return math.ceil(x - eps)


def guarded_floor(x: float, eps: float = 1e-12) -> int:
    """Floor that forgives values a hair below an integer (2/r_6 = 2)."""
    return math.floor(x + eps)


def geometry_constants(n: int) -> tuple[float, int]:
    """Subcenter spacing factor r_n = 2 sin(pi/n) and ring-hop threshold
    k_n = floor(2/r_n), the longest hop count for which the subcenter-ring
    route is no longer than the route through the center."""
    if n < 4:
        raise ValidationError(f"n must be >= 4, got {n}")
    r_n = 2.0 * math.sin(math.pi / n)
    k_n = guarded_floor(2.0 / r_n)
    return r_n, k_n


@dataclass(frozen=True)
class CityParams:
    """Validated parameter set of a Parametric City instance."""

    n: int
    T: float
    g: float
    Y: float
    a: float
    alpha: float
    beta: float
    gamma: float
    K: float
    Lambda: float | None = None  # None: non-binding default, see default_lambda()
    mu: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValidationError(f"n must be >= 4, got {self.n}")
        for name in ("T", "g", "Y", "K"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.a < 1:
            raise ValidationError(f"a must be in (0, 1), got {self.a}")
        for name in ("alpha", "beta", "gamma"):
            if not 0 < getattr(self, name) < 1:
                raise ValidationError(f"{name} must be in (0, 1), got {getattr(self, name)}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-12:
            raise ValidationError(
                f"alpha+beta+gamma must equal 1, got {self.alpha + self.beta + self.gamma!r}"
            )
        if not 0 <= self.mu <= 1:
            raise ValidationError(f"mu must be in [0, 1], got {self.mu}")
        if self.Lambda is not None and self.Lambda < 1:
            raise ValidationError(f"Lambda must be >= 1, got {self.Lambda}")

    @property
    def tilde_alpha(self) -> float:
        return self.alpha / (self.alpha + self.gamma)

    @property
    def tilde_gamma(self) -> float:
        return self.gamma / (self.alpha + self.gamma)

    @property
    def peripheral_frequency(self) -> int:
        """Fixed frequency ceil(Y*a/(n*K)) on every peripheral arc."""
        return guarded_ceil(self.Y * self.a / (self.n * self.K))

    def default_lambda(self) -> float:
        """Street-capacity bound used when Lambda is unset: large enough to
        never bind at paper scale, documented and overridable."""
        return 4 * max(self.peripheral_frequency, guarded_ceil(self.Y / self.K))

    @property
    def effective_lambda(self) -> float:
        return self.Lambda if self.Lambda is not None else self.default_lambda()

    REQUIRED_KEYS = ("n", "T", "g", "Y", "a", "alpha", "beta", "gamma", "K")

    @classmethod
    def from_mapping(cls, data: Mapping[str, object]) -> "CityParams":
        missing = [k for k in cls.REQUIRED_KEYS if k not in data]
        if missing:
            raise ValidationError(f"missing config keys: {', '.join(missing)}")
        unknown = set(data) - set(cls.REQUIRED_KEYS) - {"Lambda", "mu"}
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = {k: float(data[k]) for k in data}
        kwargs["n"] = int(data["n"])
        return cls(**kwargs)


def read_config_mapping(text: str) -> dict[str, str]:
    """Key-value pairs of a flat config file (one ``key = value`` per
    line, '#' comments allowed)."""
    data: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ValidationError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, value = parts
        data[key.strip()] = value.strip()
    return data


def parse_config(text: str) -> CityParams:
    return CityParams.from_mapping(read_config_mapping(text))


Rotatable = Union[Node, Arc, Sequence[Node]]


def rotate(entity: Rotatable, z: int, n: int):
    """Rotate a node, arc or node sequence by ``z`` zones (mod ``n``).

    CD is fixed, SC_j and P_j map to index j+z mod n; tuples are mapped
    componentwise.
    """
    if isinstance(entity, Node):
        if entity.kind == CD_KIND:
            return CD
        return Node(entity.kind, (entity.index + z) % n)
    if isinstance(entity, Arc):
        return Arc(rotate(entity.tail, z, n), rotate(entity.head, z, n))
    return type(entity)(rotate(v, z, n) for v in entity)


def build_demand(params: CityParams) -> dict[tuple[Node, Node], float]:
    """Origin-destination matrix of the morning rush hour: peripheries are
    pure generators, CD a pure attractor, subcenters both.  Only the
    strictly positive entries are stored."""
    n, Y, a = params.n, params.Y, params.a
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    t_alpha, t_gamma = params.tilde_alpha, params.tilde_gamma
    d: dict[tuple[Node, Node], float] = {}
    for i in range(n):
        p_i, sc_i = Node(P_KIND, i), Node(SC_KIND, i)
        d[p_i, sc_i] = a * Y * beta / n
        d[p_i, CD] = a * Y * alpha / n
        d[sc_i, CD] = (1 - a) * Y * t_alpha / n
        for j in range(n):
            if j == i:
                continue
            sc_j = Node(SC_KIND, j)
            d[p_i, sc_j] = a * Y * gamma / (n * (n - 1))
            d[sc_i, sc_j] = (1 - a) * Y * t_gamma / (n * (n - 1))
    return d


@dataclass(frozen=True)
class CityInstance:
    """Immutable Parametric City: graph, arc lengths and demand."""

    params: CityParams
    nodes: tuple[Node, ...]
    arcs: tuple[Arc, ...]
    tau: np.ndarray  # arc lengths, canonical arc order
    demand: dict[tuple[Node, Node], float]
    arc_index: dict[Arc, int] = field(repr=False)
    r_n: float = 0.0
    k_n: int = 0

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def origins(self) -> tuple[Node, ...]:
        """Flow commodities, one per trip-generating node: P_0..P_{n-1}
        then SC_0..SC_{n-1}."""
        n = self.n
        return tuple(Node(P_KIND, i) for i in range(n)) + tuple(Node(SC_KIND, i) for i in range(n))

    def origin_id(self, node: Node) -> int:
        if node.kind == P_KIND:
            return node.index
        if node.kind == SC_KIND:
            return self.n + node.index
        raise ValueError(f"{node.name} is not a trip origin")

    def node_id(self, node: Node) -> int:
        if node.kind == CD_KIND:
            return 0
        if node.kind == SC_KIND:
            return 1 + node.index
        return 1 + self.n + node.index

    def rotate_arc_id(self, a: int, z: int) -> int:
        orbit, i = divmod(a, self.n)
        return orbit * self.n + (i + z) % self.n

    def rotate_origin_id(self, o: int, z: int) -> int:
        group, i = divmod(o, self.n)
        return group * self.n + (i + z) % self.n

    def supply(self, origin: Node) -> float:
        return sum(v for (s, _), v in self.demand.items() if s == origin)


def _arc_list(n: int) -> list[Arc]:
    arcs: list[Arc] = []
    for orbit in range(N_ORBITS):
        for i in range(n):
            sc_i = Node(SC_KIND, i)
            if orbit == ORBIT_CS:
                arcs.append(Arc(CD, sc_i))
            elif orbit == ORBIT_SS_PLUS:
                arcs.append(Arc(sc_i, Node(SC_KIND, (i + 1) % n)))
            elif orbit == ORBIT_SS_MINUS:
                arcs.append(Arc(sc_i, Node(SC_KIND, (i - 1) % n)))
            elif orbit == ORBIT_SP:
                arcs.append(Arc(sc_i, Node(P_KIND, i)))
            elif orbit == ORBIT_PS:
                arcs.append(Arc(Node(P_KIND, i), sc_i))
            else:
                arcs.append(Arc(sc_i, CD))
    return arcs


#: Arc length factors per orbit, as multiples of T (r_n substituted at build).
def _orbit_tau(orbit: int, T: float, g: float, r_n: float) -> float:
    if orbit in (ORBIT_CS, ORBIT_SC):
        return T
    if orbit in (ORBIT_SS_PLUS, ORBIT_SS_MINUS):
        return r_n * T
    return g * T


def build_city(params: CityParams) -> CityInstance:
    """Construct the full instance; deterministic for equal inputs."""
    n = params.n
    r_n, k_n = geometry_constants(n)
    nodes = (CD,) + tuple(Node(SC_KIND, i) for i in range(n)) + tuple(Node(P_KIND, i) for i in range(n))
    arcs = tuple(_arc_list(n))
    tau = np.array([_orbit_tau(a_id // n, params.T, params.g, r_n) for a_id in range(6 * n)])
    demand = build_demand(params)
    arc_index = {arc: i for i, arc in enumerate(arcs)}
    return CityInstance(
        params=params,
        nodes=nodes,
        arcs=arcs,
        tau=tau,
        demand=demand,
        arc_index=arc_index,
        r_n=r_n,
        k_n=k_n,
    )
