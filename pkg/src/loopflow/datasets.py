"""Bundled example networks and a random grid generator."""
from __future__ import annotations

import dataclasses
from importlib import resources

import numpy as np

from . import hydraulics
from .netfile import parse_network
from .network import FlowState, LoopDef, Network, Node, Pipe, cycle_basis, loop_incidence

FIGURE1 = "figure1.net"
FIGURE1_TABLE1 = "figure1_table1.net"


def bundled_path(name: str):
    return resources.files("loopflow") / "data" / name


def load_bundled(name: str = FIGURE1):
    return parse_network(bundled_path(name).read_text(encoding="utf-8"))


def figure1():
    """Five-loop gas network with the assumed initial flows (m3/h in the file)."""
    return load_bundled(FIGURE1)


def figure1_table1():
    """Same network started from the 4-decimal flows of the first-iteration table."""
    return load_bundled(FIGURE1_TABLE1)


def grid_network(rows=3, cols=3, fluid=None, seed=0, circulation=0.05, supply=1.0, loops="faces"):
    """Rectangular grid with one supply node and random consumers.

    ``loops="faces"`` uses one loop per grid cell (every pipe in at most two
    loops); ``loops="basis"`` uses :func:`cycle_basis`.  Initial flows satisfy
    the node law: spanning-tree flows that carry every demand from the supply
    corner, plus a random circulation in each loop.
    """
    rng = np.random.default_rng(seed)
    fluid = fluid if fluid is not None else hydraulics.RenouardGas()
    name = lambda r, c: f"n{r}_{c}"  # noqa: E731

    ids = [name(r, c) for r in range(rows) for c in range(cols)]
    weights = rng.uniform(0.2, 1.0, size=len(ids) - 1)
    demands = [-supply] + list(supply * weights / weights.sum())
    demands[0] = -float(np.sum(demands[1:]))
    nodes = [Node(i, float(d)) for i, d in zip(ids, demands)]

    pipes = []
    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < rows and cc < cols:
                    a, b = name(r, c), name(rr, cc)
                    if rng.random() < 0.5:
                        a, b = b, a
                    extra = {}
                    if isinstance(fluid, hydraulics.DarcyWater):
                        extra["roughness"] = float(rng.uniform(1e-5, 5e-4))
                    if isinstance(fluid, hydraulics.AtkinsonVent):
                        extra["discharge_coeff"] = float(rng.uniform(0.5, 0.9))
                        extra["opening_area"] = float(rng.uniform(0.2, 2.0))
                    pipes.append(
                        Pipe(
                            id=f"p{len(pipes) + 1}",
                            from_node=a,
                            to_node=b,
                            diameter=float(rng.choice([0.1, 0.15, 0.2, 0.25, 0.3])),
                            length=float(rng.uniform(100.0, 800.0)),
                            **extra,
                        )
                    )
    net = Network(pipes, (), fluid, nodes=nodes)
    if loops == "faces":
        loop_defs = _grid_faces(rows, cols, pipes, name)
    elif loops == "basis":
        loop_defs = cycle_basis(net)
    else:
        raise ValueError(f"unknown loop layout {loops!r}")
    net = dataclasses.replace(net, loops=tuple(loop_defs))
    q = tree_flows(net)
    m = loop_incidence(net)
    q = q + m.T @ (circulation * supply * rng.uniform(-1.0, 1.0, size=m.shape[0]))
    return net, FlowState.from_vector(net, q)


def _grid_faces(rows, cols, pipes, name):
    by_ends = {frozenset((p.from_node, p.to_node)): p for p in pipes}
    faces = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            ring = [name(r, c), name(r, c + 1), name(r + 1, c + 1), name(r + 1, c), name(r, c)]
            members = []
            for a, b in zip(ring, ring[1:]):
                p = by_ends[frozenset((a, b))]
                members.append((p.id, 1 if p.from_node == a else -1))
            faces.append(LoopDef(f"F{r}_{c}", tuple(members)))
    return faces


def tree_flows(net: Network) -> np.ndarray:
    """A node-balanced flow vector using only the pipes of a BFS spanning tree."""
    root = net.node_ids[0]
    adj = {n: [] for n in net.node_ids}
    for i, p in enumerate(net.pipes):
        adj[p.from_node].append((i, p.to_node))
        adj[p.to_node].append((i, p.from_node))
    order, parent = [root], {root: None}
    for n in order:
        for i, other in adj[n]:
            if other not in parent:
                parent[other] = (i, n)
                order.append(other)
    q = np.zeros(len(net.pipes))
    load = {n: net.demand(n) for n in net.node_ids}
    for n in reversed(order[1:]):
        i, up = parent[n]
        # pipe carries load[n] from up to n
        q[i] = load[n] if net.pipes[i].to_node == n else -load[n]
        load[up] += load[n]
    return q
