"""Dataflow graphs: parsing, validation, and operation-group demand statistics.

A DFG is a DAG of typed operations. Every opcode belongs to exactly one
operation group; groups are the unit of functionality the explorer adds to or
removes from grid cells. The opcode -> group table is data, not code, so
alternative groupings can be swapped in from a config file.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class OpGroup(Enum):
    """The six operation groups cells can support."""

    ARITH = "Arith"
    DIV = "Div"
    FP = "FP"
    MEM = "Mem"
    MULT = "Mult"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


#: Canonical ordering used everywhere output order matters.
GROUP_ORDER: tuple[OpGroup, ...] = (
    OpGroup.ARITH,
    OpGroup.DIV,
    OpGroup.FP,
    OpGroup.MEM,
    OpGroup.MULT,
    OpGroup.OTHER,
)

#: Groups that can live on compute cells (everything except Mem, which is
#: restricted to the I/O border).
COMPUTE_GROUPS: tuple[OpGroup, ...] = tuple(
    g for g in GROUP_ORDER if g is not OpGroup.MEM
)

_GROUP_BY_NAME = {g.value: g for g in OpGroup}


class DfgError(Exception):
    """Malformed DFG or opcode-table input."""


def group_from_name(name: str) -> OpGroup:
    try:
        return _GROUP_BY_NAME[name]
    except KeyError:
        raise DfgError(f"unknown operation group {name!r}") from None


class OpcodeTable:
    """Total opcode -> group classification loaded from config."""

    def __init__(self, entries: dict[str, OpGroup]):
        self._entries = dict(entries)

    @classmethod
    def from_text(cls, text: str) -> "OpcodeTable":
        entries: dict[str, OpGroup] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DfgError(f"line {lineno}: expected '<OPCODE> <Group>', got {raw!r}")
            opcode, group_name = parts
            if opcode in entries:
                raise DfgError(f"line {lineno}: duplicate opcode {opcode!r}")
            if group_name not in _GROUP_BY_NAME:
                raise DfgError(f"line {lineno}: unknown group {group_name!r}")
            entries[opcode] = _GROUP_BY_NAME[group_name]
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "OpcodeTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def default(cls) -> "OpcodeTable":
        data = resources.files("hetgrid").joinpath("data/opcodes.txt").read_text()
        return cls.from_text(data)

    def __contains__(self, opcode: str) -> bool:
        return opcode in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def opcodes(self) -> list[str]:
        return sorted(self._entries)

    def opcodes_for(self, group: OpGroup) -> list[str]:
        return sorted(op for op, g in self._entries.items() if g is group)

    def classify(self, opcode: str) -> OpGroup:
        try:
            return self._entries[opcode]
        except KeyError:
            raise DfgError(f"unknown opcode {opcode!r}") from None


def classify(opcode: str, table: OpcodeTable) -> OpGroup:
    """Return the unique group of ``opcode``; raises DfgError if unknown."""
    return table.classify(opcode)


@dataclass(frozen=True)
class Dfg:
    """Immutable DAG of typed operations.

    ``nodes`` and ``edges`` preserve file order. ``node_groups`` is the
    classification of each node under the table used at parse time, aligned
    with ``nodes``.
    """

    name: str
    nodes: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]
    node_groups: tuple[OpGroup, ...]

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def group_of(self, node_id: str) -> OpGroup:
        return self.groups_by_id()[node_id]

    def groups_by_id(self) -> dict[str, OpGroup]:
        cached = getattr(self, "_groups_by_id", None)
        if cached is None:
            cached = {nid: g for (nid, _), g in zip(self.nodes, self.node_groups)}
            object.__setattr__(self, "_groups_by_id", cached)
        return cached

    def demand(self) -> dict[OpGroup, int]:
        """Per-group node counts (sums to the node count)."""
        counts = {g: 0 for g in GROUP_ORDER}
        for g in self.node_groups:
            counts[g] += 1
        return counts

    def uses(self, groups: Iterable[OpGroup]) -> bool:
        wanted = set(groups)
        return any(g in wanted for g in self.node_groups)


def _check_acyclic(nodes: tuple[tuple[str, str], ...], edges) -> None:
    # Kahn's algorithm; anything left over sits on a cycle.
    indeg = {nid: 0 for nid, _ in nodes}
    succs: dict[str, list[str]] = {nid: [] for nid, _ in nodes}
    for src, dst in edges:
        indeg[dst] += 1
        succs[src].append(dst)
    ready = [nid for nid, _ in nodes if indeg[nid] == 0]
    seen = 0
    while ready:
        nid = ready.pop()
        seen += 1
        for nxt in succs[nid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    if seen != len(nodes):
        cyclic = sorted(nid for nid, deg in indeg.items() if deg > 0)
        raise DfgError(f"cycle detected involving nodes: {', '.join(cyclic)}")


def parse_dfg(text: str, table: OpcodeTable) -> Dfg:
    """Parse the line-oriented DFG format.

    Format: header ``dfg <name>``, then ``node <id> <OPCODE>`` and
    ``edge <src> <dst>`` lines in any order below the header; ``#`` starts a
    comment. Node and edge order is preserved as written.
    """
    name: str | None = None
    nodes: list[tuple[str, str]] = []
    node_ids: set[str] = set()
    edges: list[tuple[str, str]] = []
    edge_lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "dfg":
            if name is not None:
                raise DfgError(f"line {lineno}: duplicate 'dfg' header")
            if len(parts) != 2:
                raise DfgError(f"line {lineno}: expected 'dfg <name>'")
            name = parts[1]
        elif kind == "node":
            if len(parts) != 3:
                raise DfgError(f"line {lineno}: expected 'node <id> <OPCODE>'")
            nid, opcode = parts[1], parts[2]
            if nid in node_ids:
                raise DfgError(f"line {lineno}: duplicate node id {nid!r}")
            if opcode not in table:
                raise DfgError(f"line {lineno}: unknown opcode {opcode!r}")
            node_ids.add(nid)
            nodes.append((nid, opcode))
        elif kind == "edge":
            if len(parts) != 3:
                raise DfgError(f"line {lineno}: expected 'edge <src> <dst>'")
            edges.append((parts[1], parts[2]))
            edge_lines.append(lineno)
        else:
            raise DfgError(f"line {lineno}: unknown directive {kind!r}")

    if name is None:
        raise DfgError("missing 'dfg <name>' header")
    for (src, dst), lineno in zip(edges, edge_lines):
        for endpoint in (src, dst):
            if endpoint not in node_ids:
                raise DfgError(
                    f"line {lineno}: edge endpoint {endpoint!r} names no declared node"
                )

    node_tuple = tuple(nodes)
    edge_tuple = tuple(edges)
    _check_acyclic(node_tuple, edge_tuple)
    groups = tuple(table.classify(op) for _, op in node_tuple)
    return Dfg(name=name, nodes=node_tuple, edges=edge_tuple, node_groups=groups)


def parse_dfg_file(path, table: OpcodeTable) -> Dfg:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dfg(fh.read(), table)


def serialize_dfg(dfg: Dfg) -> str:
    lines = [f"dfg {dfg.name}"]
    lines.extend(f"node {nid} {op}" for nid, op in dfg.nodes)
    lines.extend(f"edge {src} {dst}" for src, dst in dfg.edges)
    return "\n".join(lines) + "\n"


def find_min_groups(dfgs: list[Dfg]) -> dict[OpGroup, int]:
    """Per-group max of per-DFG demands over a non-empty DFG set.

    This is only a theoretical lower bound on the instances a layout needs;
    it does not guarantee the set actually maps.
    """
    if not dfgs:
        raise ValueError("empty DFG set")
    result = {g: 0 for g in GROUP_ORDER}
    for dfg in dfgs:
        for g, n in dfg.demand().items():
            if n > result[g]:
                result[g] = n
    return result


def present_groups(dfgs: Iterable[Dfg]) -> set[OpGroup]:
    """All groups used by at least one node across the set."""
    out: set[OpGroup] = set()
    for dfg in dfgs:
        out.update(dfg.node_groups)
    return out


def corpus_paths() -> list:
    """Paths of the bundled sample DFG corpus, sorted by file name."""
    corpus = resources.files("hetgrid").joinpath("data/corpus")
    return sorted(corpus.iterdir(), key=lambda p: p.name)


def load_corpus(table: OpcodeTable | None = None) -> list[Dfg]:
    table = table or OpcodeTable.default()
    return [parse_dfg(p.read_text(), table) for p in corpus_paths()]
