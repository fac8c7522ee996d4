"""Pipe network topology, loop structure and Kirchhoff residuals.

Flows are stored once per pipe in the pipe's canonical direction.  A loop
lists its pipes with an orientation of +1 (canonical direction runs along the
loop) or -1 (against it); every loop-relative sign is derived from that.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import hydraulics
from .errors import DisconnectedGraphError, NodeDataUnavailable, ValidationError


@dataclass(frozen=True)
class Node:
    id: str
    demand: float = 0.0  # m3/s, positive = consumption


@dataclass(frozen=True)
class Pipe:
    id: str
    diameter: float
    length: float
    from_node: Optional[str] = None
    to_node: Optional[str] = None
    roughness: Optional[float] = None
    discharge_coeff: Optional[float] = None
    opening_area: Optional[float] = None

    def __post_init__(self):
        if not (self.diameter > 0 and math.isfinite(self.diameter)):
            raise ValidationError(f"diameter must be > 0, got {self.diameter}", pipe=self.id)
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValidationError(f"length must be > 0, got {self.length}", pipe=self.id)
        if self.roughness is not None and self.roughness < 0:
            raise ValidationError(f"roughness must be >= 0, got {self.roughness}", pipe=self.id)
        for name in ("discharge_coeff", "opening_area"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"{name} must be > 0, got {value}", pipe=self.id)
        if (self.from_node is None) != (self.to_node is None):
            raise ValidationError("from_node and to_node must be given together", pipe=self.id)

    @property
    def has_endpoints(self) -> bool:
        return self.from_node is not None


@dataclass(frozen=True)
class LoopDef:
    id: str
    members: tuple  # ((pipe_id, orientation), ...)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple((str(p), int(o)) for p, o in self.members))
        seen = set()
        for pipe_id, orientation in self.members:
            if orientation not in (1, -1):
                raise ValidationError(
                    f"loop {self.id}: orientation of pipe {pipe_id} must be +1 or -1",
                    loop=self.id, pipe=pipe_id,
                )
            if pipe_id in seen:
                raise ValidationError(
                    f"loop {self.id}: pipe {pipe_id} listed twice", loop=self.id, pipe=pipe_id
                )
            seen.add(pipe_id)
        if not self.members:
            raise ValidationError(f"loop {self.id} has no members", loop=self.id)


@dataclass(frozen=True)
class Network:
    pipes: tuple
    loops: tuple = ()
    fluid: hydraulics.FluidModel = field(default_factory=hydraulics.RenouardGas)
    nodes: Optional[tuple] = None
    operating_pressure_abs: Optional[float] = None
    reference_pressure_abs: float = hydraulics.STANDARD_PRESSURE

    def __post_init__(self):
        object.__setattr__(self, "pipes", tuple(self.pipes))
        object.__setattr__(self, "loops", tuple(self.loops))
        if self.nodes is not None:
            object.__setattr__(self, "nodes", tuple(self.nodes))
        self._validate()

    def _validate(self):
        if not self.pipes:
            raise ValidationError("network has no pipes")
        ids = [p.id for p in self.pipes]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate pipe ids: {', '.join(dup)}")
        pipe_index = self.pipe_index
        loop_ids = [lp.id for lp in self.loops]
        if len(set(loop_ids)) != len(loop_ids):
            raise ValidationError("duplicate loop ids")

        for loop in self.loops:
            for pipe_id, _ in loop.members:
                if pipe_id not in pipe_index:
                    raise ValidationError(
                        f"loop {loop.id} references unknown pipe {pipe_id}",
                        loop=loop.id, pipe=pipe_id,
                    )

        if isinstance(self.fluid, hydraulics.AtkinsonVent):
            for p in self.pipes:
                if p.discharge_coeff is None or p.opening_area is None:
                    raise ValidationError(
                        f"pipe {p.id}: ventilation model needs discharge_coeff and opening_area",
                        pipe=p.id,
                    )
        if self.operating_pressure_abs is not None and not (
            self.operating_pressure_abs >= self.reference_pressure_abs > 0
        ):
            raise ValidationError("operating pressure must be >= reference pressure > 0")

        if self.nodes is not None:
            node_ids = [n.id for n in self.nodes]
            if len(set(node_ids)) != len(node_ids):
                raise ValidationError("duplicate node ids")
            known = set(node_ids)
            for p in self.pipes:
                if p.has_endpoints and not {p.from_node, p.to_node} <= known:
                    raise ValidationError(f"pipe {p.id} references an undeclared node", pipe=p.id)
            demands = [n.demand for n in self.nodes]
            scale = max([abs(d) for d in demands] + [1e-300])
            if abs(math.fsum(demands)) > 1e-9 * scale:
                raise ValidationError(
                    f"node demands must sum to zero (global balance), sum = {math.fsum(demands):.6g}"
                )

        if self.has_incidence and self.loops:
            components = connected_components(self)
            if len(components) == 1:
                expected = len(self.pipes) - len(self.node_ids) + 1
                if len(self.loops) != expected:
                    raise ValidationError(
                        f"{len(self.loops)} loops given but the graph has E - N + 1 = {expected} "
                        "independent loops"
                    )

    @property
    def pipe_ids(self) -> list:
        return [p.id for p in self.pipes]

    @property
    def loop_ids(self) -> list:
        return [lp.id for lp in self.loops]

    @property
    def pipe_index(self) -> dict:
        return {p.id: i for i, p in enumerate(self.pipes)}

    @property
    def has_incidence(self) -> bool:
        return all(p.has_endpoints for p in self.pipes)

    @property
    def node_ids(self) -> list:
        """Declared nodes first, then any endpoint-only nodes in order of appearance."""
        out = [n.id for n in self.nodes] if self.nodes is not None else []
        seen = set(out)
        for p in self.pipes:
            for n in (p.from_node, p.to_node):
                if n is not None and n not in seen:
                    seen.add(n)
                    out.append(n)
        return out

    def demand(self, node_id: str) -> float:
        for n in self.nodes or ():
            if n.id == node_id:
                return n.demand
        return 0.0


@dataclass(frozen=True)
class FlowState:
    """Signed volumetric flow (m3/s) per pipe in the canonical direction."""

    flows: Mapping[str, float]

    def vector(self, net: Network) -> np.ndarray:
        missing = [pid for pid in net.pipe_ids if pid not in self.flows]
        if missing:
            raise ValidationError(f"flow state has no entry for pipes: {', '.join(missing)}")
        extra = set(self.flows) - set(net.pipe_ids)
        if extra:
            raise ValidationError(f"flow state names unknown pipes: {', '.join(sorted(extra))}")
        return np.array([float(self.flows[pid]) for pid in net.pipe_ids])

    @classmethod
    def from_vector(cls, net: Network, q: Sequence[float]) -> "FlowState":
        return cls({pid: float(v) for pid, v in zip(net.pipe_ids, q)})


def loop_incidence(net: Network) -> np.ndarray:
    """Signed loops x pipes matrix of orientations."""
    idx = net.pipe_index
    m = np.zeros((len(net.loops), len(net.pipes)))
    for row, loop in enumerate(net.loops):
        for pipe_id, orientation in loop.members:
            if pipe_id not in idx:
                raise ValidationError(
                    f"loop {loop.id} references unknown pipe {pipe_id}", loop=loop.id, pipe=pipe_id
                )
            m[row, idx[pipe_id]] = orientation
    return m


def check_loop_sharing(net: Network):
    """Raise unless every pipe belongs to at most two loops.

    Holds for the face loops of a planar layout; a fundamental cycle basis
    may break it.
    """
    count = {}
    for loop in net.loops:
        for pipe_id, _ in loop.members:
            count[pipe_id] = count.get(pipe_id, 0) + 1
    for pipe_id, n in count.items():
        if n > 2:
            raise ValidationError(f"pipe {pipe_id} belongs to {n} loops (at most 2)", pipe=pipe_id)


def pipe_pressure_drops(net: Network, q: np.ndarray) -> np.ndarray:
    return np.array([hydraulics.pressure_drop(float(qi), p, net.fluid) for qi, p in zip(q, net.pipes)])


def pipe_derivatives(net: Network, q: np.ndarray) -> np.ndarray:
    return np.array(
        [hydraulics.pressure_drop_derivative(float(qi), p, net.fluid) for qi, p in zip(q, net.pipes)]
    )


def loop_residuals(net: Network, state: FlowState) -> dict:
    """Signed sum of pressure functions around each loop.

    For a member with orientation ``o`` the loop-relative flow is ``o*Q`` and
    its contribution is ``f(o*Q) = o*f(Q)``.
    """
    q = state.vector(net)
    r = loop_incidence(net) @ pipe_pressure_drops(net, q)
    return dict(zip(net.loop_ids, r.tolist()))


def node_residuals(net: Network, state: FlowState) -> dict:
    """Inflow - outflow - demand at every node."""
    if not net.has_incidence:
        raise NodeDataUnavailable()
    q = state.vector(net)
    balance = {n: 0.0 for n in net.node_ids}
    for qi, p in zip(q, net.pipes):
        balance[p.from_node] -= qi
        balance[p.to_node] += qi
    return {n: balance[n] - net.demand(n) for n in net.node_ids}


def connected_components(net: Network) -> list:
    adj = {n: [] for n in net.node_ids}
    for p in net.pipes:
        if p.has_endpoints:
            adj[p.from_node].append(p.to_node)
            adj[p.to_node].append(p.from_node)
    seen, comps = set(), []
    for start in adj:
        if start in seen:
            continue
        comp, queue = [], deque([start])
        seen.add(start)
        while queue:
            n = queue.popleft()
            comp.append(n)
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        comps.append(comp)
    return comps


def cycle_basis(net: Network, prefix: str = "C") -> list:
    """Fundamental loops of a BFS spanning tree, one per non-tree pipe.

    Each loop starts with its chord traversed in the chord's canonical
    direction (orientation +1) and closes through the tree.
    """
    if not net.has_incidence:
        raise NodeDataUnavailable()
    comps = connected_components(net)
    if len(comps) > 1:
        raise DisconnectedGraphError(comps)

    root = net.node_ids[0]
    adj = {n: [] for n in net.node_ids}
    for p in net.pipes:
        adj[p.from_node].append(p)
        adj[p.to_node].append(p)

    parent = {root: None}  # node -> (pipe, parent node)
    depth = {root: 0}
    tree_pipes = set()
    queue = deque([root])
    while queue:
        n = queue.popleft()
        for p in adj[n]:
            other = p.to_node if p.from_node == n else p.from_node
            if other not in parent:
                parent[other] = (p, n)
                depth[other] = depth[n] + 1
                tree_pipes.add(p.id)
                queue.append(other)

    def step_up(node):
        # orientation of the tree pipe when walking node -> parent
        p, up = parent[node]
        return (p.id, 1 if p.from_node == node else -1), up

    loops = []
    for p in net.pipes:
        if p.id in tree_pipes:
            continue
        # chord u -> v, then v back up to the common ancestor and down to u
        u, v = p.from_node, p.to_node
        head = [(p.id, 1)]
        down = []
        a, b = v, u
        while depth[a] > depth[b]:
            m, a = step_up(a)
            head.append(m)
        while depth[b] > depth[a]:
            (pid, o), b = step_up(b)
            down.append((pid, -o))
        while a != b:
            m, a = step_up(a)
            head.append(m)
            (pid, o), b = step_up(b)
            down.append((pid, -o))
        members = head + down[::-1]
        loops.append(LoopDef(f"{prefix}{len(loops) + 1}", tuple(members)))
    return loops
