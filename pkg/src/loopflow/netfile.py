"""Reader and writer for the ``.net`` network description format.

A document is a sequence of ``[section]`` blocks; ``#`` starts a comment::

    [fluid]
    model = renouard_gas            # or darcy_water, atkinson_vent
    relative_density = 0.64
    operating_pressure = 400000 Pa
    reference_pressure = 101325 Pa

    [pipes]
    # id  from  to  diameter_m  length_m  [roughness_m  discharge_coeff  opening_area_m2]
    1     -     -   0.305       1127.8

    [nodes]
    # id  demand  unit
    A     0.25    m3/s

    [loops]
    # id  signed pipe ids
    I     -1 +7 +8 +9 -10 -12

    [flows]
    # pipe  flow  unit
    1       1203.2  m3/h

``-`` marks an absent value.  Flows and demands must carry a unit tag
(``m3/s`` or ``m3/h``); pressures carry ``Pa``.  Internally every flow is in
m3/s.  Without a ``[loops]`` section the loops are derived from node
incidence; without ``[flows]`` all flows start at zero.
"""
from __future__ import annotations

import dataclasses

from . import hydraulics
from .errors import LoopflowError, ValidationError
from .network import FlowState, LoopDef, Network, Node, Pipe, cycle_basis

FLOW_UNITS = {"m3/s": 1.0, "m3/h": 1.0 / 3600.0}
SECTIONS = ("fluid", "pipes", "nodes", "loops", "flows")

FLUID_MODELS = {
    "renouard_gas": (hydraulics.RenouardGas, ("relative_density",)),
    "darcy_water": (hydraulics.DarcyWater, ("density", "kinematic_viscosity")),
    "atkinson_vent": (hydraulics.AtkinsonVent, ("density",)),
}


class NetworkFileError(ValidationError):
    pass


def _number(token, lineno, what):
    try:
        return float(token)
    except ValueError:
        raise NetworkFileError(f"{what}: expected a number, got {token!r}", line=lineno) from None


def _optional_number(token, lineno, what):
    return None if token == "-" else _number(token, lineno, what)


def _flow(value_tok, unit_tok, lineno, what):
    if unit_tok is None:
        raise NetworkFileError(f"{what}: missing unit tag (m3/s or m3/h)", line=lineno)
    if unit_tok not in FLOW_UNITS:
        raise NetworkFileError(f"{what}: unknown flow unit {unit_tok!r}", line=lineno)
    return _number(value_tok, lineno, what) * FLOW_UNITS[unit_tok]


def _pressure(text, lineno, key):
    parts = text.split()
    if len(parts) != 2 or parts[1] != "Pa":
        raise NetworkFileError(f"{key}: expected '<value> Pa', got {text!r}", line=lineno)
    return _number(parts[0], lineno, key)


def _split_sections(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise NetworkFileError(f"unknown section [{name}]", line=lineno)
            if name in sections:
                raise NetworkFileError(f"section [{name}] appears twice", line=lineno)
            sections[name] = []
            current = name
            continue
        if current is None:
            raise NetworkFileError("content before the first [section]", line=lineno)
        sections[current].append((lineno, line))
    return sections


def _parse_fluid(lines):
    values = {}
    where = {}
    for lineno, line in lines:
        if "=" not in line:
            raise NetworkFileError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
        where[key] = lineno
    model = values.pop("model", None)
    if model not in FLUID_MODELS:
        raise NetworkFileError(
            f"fluid model must be one of {', '.join(FLUID_MODELS)}, got {model!r}",
            line=where.get("model"),
        )
    cls, params = FLUID_MODELS[model]
    kwargs = {}
    for name in params:
        if name in values:
            kwargs[name] = _number(values.pop(name), where[name], name)
    extra = {}
    for key in ("operating_pressure", "reference_pressure"):
        if key in values:
            extra[key] = _pressure(values.pop(key), where[key], key)
    if values:
        key = next(iter(values))
        raise NetworkFileError(f"unknown fluid parameter {key!r} for {model}", line=where[key])
    try:
        fluid = cls(**kwargs)
    except LoopflowError as exc:
        raise NetworkFileError(str(exc), line=where.get("model")) from exc
    return fluid, extra


def _parse_pipes(lines):
    pipes = []
    seen = {}
    for lineno, line in lines:
        tok = line.split()
        if not 5 <= len(tok) <= 8:
            raise NetworkFileError(
                "pipe row needs: id from to diameter length [roughness cd area]", line=lineno
            )
        tok += ["-"] * (8 - len(tok))
        pid = tok[0]
        if pid in seen:
            raise NetworkFileError(f"duplicate pipe id {pid} (first on line {seen[pid]})", line=lineno)
        seen[pid] = lineno
        if pid[0] in "+-":
            raise NetworkFileError(f"pipe id {pid!r} may not start with a sign", line=lineno)
        frm = None if tok[1] == "-" else tok[1]
        to = None if tok[2] == "-" else tok[2]
        try:
            pipes.append(
                Pipe(
                    id=pid,
                    from_node=frm,
                    to_node=to,
                    diameter=_number(tok[3], lineno, "diameter"),
                    length=_number(tok[4], lineno, "length"),
                    roughness=_optional_number(tok[5], lineno, "roughness"),
                    discharge_coeff=_optional_number(tok[6], lineno, "discharge_coeff"),
                    opening_area=_optional_number(tok[7], lineno, "opening_area"),
                )
            )
        except NetworkFileError:
            raise
        except ValidationError as exc:
            raise NetworkFileError(f"pipe {pid}: {exc}", pipe=pid, line=lineno) from exc
    return pipes, seen


def _parse_nodes(lines):
    nodes = []
    for lineno, line in lines:
        tok = line.split()
        if len(tok) not in (2, 3):
            raise NetworkFileError("node row needs: id demand unit", line=lineno)
        nodes.append(Node(tok[0], _flow(tok[1], tok[2] if len(tok) == 3 else None, lineno, "demand")))
    return nodes


def _parse_loops(lines, pipe_lines):
    loops = []
    for lineno, line in lines:
        tok = line.split()
        if len(tok) < 2:
            raise NetworkFileError("loop row needs an id and at least one signed pipe", line=lineno)
        members = []
        for m in tok[1:]:
            if m[0] not in "+-" or len(m) == 1:
                raise NetworkFileError(
                    f"loop {tok[0]}: member {m!r} needs an orientation prefix (+ or -)", line=lineno
                )
            if m[1:] not in pipe_lines:
                raise NetworkFileError(
                    f"loop {tok[0]} references unknown pipe {m[1:]}",
                    loop=tok[0], pipe=m[1:], line=lineno,
                )
            members.append((m[1:], 1 if m[0] == "+" else -1))
        try:
            loops.append(LoopDef(tok[0], tuple(members)))
        except ValidationError as exc:
            raise NetworkFileError(str(exc), loop=tok[0], line=lineno) from exc
    return loops


def _parse_flows(lines, pipe_lines):
    flows = {}
    for lineno, line in lines:
        tok = line.split()
        if len(tok) not in (2, 3):
            raise NetworkFileError("flow row needs: pipe flow unit", line=lineno)
        pid = tok[0]
        if pid not in pipe_lines:
            raise NetworkFileError(f"flow given for unknown pipe {pid}", pipe=pid, line=lineno)
        if pid in flows:
            raise NetworkFileError(f"second flow entry for pipe {pid}", pipe=pid, line=lineno)
        flows[pid] = _flow(tok[1], tok[2] if len(tok) == 3 else None, lineno, f"flow of pipe {pid}")
    missing = [pid for pid in pipe_lines if pid not in flows]
    if missing:
        raise NetworkFileError(f"[flows] has no entry for pipes: {', '.join(missing)}")
    return flows


def parse_network(text: str):
    """Parse a document into a validated ``(Network, FlowState)``."""
    sections = _split_sections(text)
    if "fluid" not in sections:
        raise NetworkFileError("missing [fluid] section")
    fluid, pressures = _parse_fluid(sections["fluid"])
    pipes, pipe_lines = _parse_pipes(sections.get("pipes", []))
    if not pipes:
        raise NetworkFileError("the [pipes] table is empty")
    nodes = _parse_nodes(sections["nodes"]) if "nodes" in sections else None
    loops = _parse_loops(sections.get("loops", []), pipe_lines)
    kwargs = dict(fluid=fluid, nodes=nodes or None)
    if "operating_pressure" in pressures:
        kwargs["operating_pressure_abs"] = pressures["operating_pressure"]
    if "reference_pressure" in pressures:
        kwargs["reference_pressure_abs"] = pressures["reference_pressure"]

    net = Network(pipes, loops, **kwargs)
    if not loops and net.has_incidence:
        net = dataclasses.replace(net, loops=tuple(cycle_basis(net)))

    if "flows" in sections:
        flows = _parse_flows(sections["flows"], pipe_lines)
    else:
        flows = {pid: 0.0 for pid in pipe_lines}
    return net, FlowState(flows)


def read_network(path):
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def _fmt(x):
    return "-" if x is None else repr(float(x))


def serialize_network(net: Network, state: FlowState) -> str:
    """Canonical form: flows and demands in m3/s, floats in shortest repr."""
    out = ["[fluid]"]
    for model, (cls, params) in FLUID_MODELS.items():
        if isinstance(net.fluid, cls):
            out.append(f"model = {model}")
            out += [f"{name} = {_fmt(getattr(net.fluid, name))}" for name in params]
    if net.operating_pressure_abs is not None:
        out.append(f"operating_pressure = {_fmt(net.operating_pressure_abs)} Pa")
    out.append(f"reference_pressure = {_fmt(net.reference_pressure_abs)} Pa")

    out += ["", "[pipes]", "# id from to diameter length roughness discharge_coeff opening_area"]
    for p in net.pipes:
        out.append(
            " ".join(
                [p.id, p.from_node or "-", p.to_node or "-", _fmt(p.diameter), _fmt(p.length),
                 _fmt(p.roughness), _fmt(p.discharge_coeff), _fmt(p.opening_area)]
            )
        )
    if net.nodes:
        out += ["", "[nodes]"]
        out += [f"{n.id} {_fmt(n.demand)} m3/s" for n in net.nodes]
    if net.loops:
        out += ["", "[loops]"]
        for loop in net.loops:
            members = " ".join(("+" if o > 0 else "-") + pid for pid, o in loop.members)
            out.append(f"{loop.id} {members}")
    out += ["", "[flows]"]
    out += [f"{pid} {_fmt(state.flows[pid])} m3/s" for pid in net.pipe_ids]
    return "\n".join(out) + "\n"
