"""Grid layout model: cells, functional layouts, and the component cost model.

A layout is an R x C grid. Border cells are I/O cells (load/store only, left
untouched by the explorer); interior cells are compute cells carrying a set of
supported operation groups and a 4-bit mask of retained input FIFO ports, one
per 4NN direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .dfg import COMPUTE_GROUPS, GROUP_ORDER, OpGroup, group_from_name


class LayoutError(Exception):
    """Malformed layout input or invalid grid geometry."""


class CellKind(Enum):
    IO = "IO"
    COMPUTE = "COMPUTE"


#: 4NN direction order: index doubles as the FIFO-port bit position.
DIRECTIONS = ("N", "E", "S", "W")
DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))
FULL_MASK = 0b1111


def opposite(direction: int) -> int:
    return (direction + 2) % 4


@dataclass(frozen=True)
class CellConfig:
    kind: CellKind
    groups: frozenset  # of OpGroup; empty for IO cells
    fifo_mask: int = FULL_MASK

    def __post_init__(self):
        if self.kind is CellKind.IO and self.groups:
            raise LayoutError("IO cells carry no operation groups")
        if OpGroup.MEM in self.groups:
            raise LayoutError("compute cells never contain Mem")
        if not 0 <= self.fifo_mask <= FULL_MASK:
            raise LayoutError(f"fifo mask out of range: {self.fifo_mask}")

    def has_port(self, direction: int) -> bool:
        return bool(self.fifo_mask >> direction & 1)

    def port_count(self) -> int:
        return bin(self.fifo_mask).count("1")


class Layout:
    """R x C grid of cell configurations, treated as a value."""

    __slots__ = ("rows", "cols", "cells")

    def __init__(self, rows: int, cols: int, cells: list[CellConfig]):
        if rows < 3 or cols < 3:
            raise LayoutError(f"grid too small: {rows}x{cols} (need at least 3x3)")
        if len(cells) != rows * cols:
            raise LayoutError(
                f"expected {rows * cols} cells for {rows}x{cols}, got {len(cells)}"
            )
        self.rows = rows
        self.cols = cols
        self.cells = cells
        for r in range(rows):
            for c in range(cols):
                is_border = r in (0, rows - 1) or c in (0, cols - 1)
                kind = cells[r * cols + c].kind
                if is_border and kind is not CellKind.IO:
                    raise LayoutError(f"border cell ({r},{c}) must be IO")
                if not is_border and kind is not CellKind.COMPUTE:
                    raise LayoutError(f"interior cell ({r},{c}) must be COMPUTE")

    def index(self, r: int, c: int) -> int:
        return r * self.cols + c

    def cell(self, r: int, c: int) -> CellConfig:
        return self.cells[r * self.cols + c]

    def is_io(self, r: int, c: int) -> bool:
        return self.cell(r, c).kind is CellKind.IO

    @property
    def compute_count(self) -> int:
        return (self.rows - 2) * (self.cols - 2)

    @property
    def io_count(self) -> int:
        return self.rows * self.cols - self.compute_count

    def compute_coords(self):
        """Interior coordinates in row-major order."""
        for r in range(1, self.rows - 1):
            for c in range(1, self.cols - 1):
                yield (r, c)

    def io_coords(self):
        for r in range(self.rows):
            for c in range(self.cols):
                if r in (0, self.rows - 1) or c in (0, self.cols - 1):
                    yield (r, c)

    def supporting_cells(self, group: OpGroup) -> tuple[tuple[int, int], ...]:
        """Row-major coordinates of cells that can host a node of ``group``."""
        if group is OpGroup.MEM:
            return tuple(self.io_coords())
        return tuple(
            (r, c) for (r, c) in self.compute_coords() if group in self.cell(r, c).groups
        )

    def with_cell(self, r: int, c: int, cell: CellConfig) -> "Layout":
        cells = list(self.cells)
        cells[r * self.cols + c] = cell
        return Layout(self.rows, self.cols, cells)

    def with_groups_removed(self, r: int, c: int, groups) -> "Layout":
        old = self.cell(r, c)
        removed = frozenset(groups)
        if old.kind is not CellKind.COMPUTE or not removed <= old.groups:
            raise LayoutError(f"cannot remove {sorted(g.value for g in removed)} from ({r},{c})")
        return self.with_cell(r, c, CellConfig(old.kind, old.groups - removed, old.fifo_mask))

    def group_grid_key(self) -> tuple:
        """Canonical hashable key of the compute cells' group assignment."""
        return tuple(
            frozenset(self.cell(r, c).groups) for (r, c) in self.compute_coords()
        )

    def mask_key(self) -> tuple:
        return tuple(cell.fifo_mask for cell in self.cells)

    def equivalent(self, other: "Layout") -> bool:
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.group_grid_key() == other.group_grid_key()
            and self.mask_key() == other.mask_key()
        )


def create_full_layout(rows: int, cols: int, groups) -> Layout:
    """Homogeneous layout: every compute cell supports all given groups.

    Mem is dropped from the compute-cell set (it lives on the I/O border);
    all FIFO ports are retained.
    """
    compute_groups = frozenset(groups) - {OpGroup.MEM}
    cells = []
    for r in range(rows):
        for c in range(cols):
            if r in (0, rows - 1) or c in (0, cols - 1):
                cells.append(CellConfig(CellKind.IO, frozenset()))
            else:
                cells.append(CellConfig(CellKind.COMPUTE, compute_groups))
    return Layout(rows, cols, cells)


@dataclass(frozen=True)
class GroupCensus:
    """Compute-cell count plus total instances of each group."""

    n_t: int
    counts: dict

    def total_instances(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, group: OpGroup) -> int:
        return self.counts.get(group, 0)


def census(layout: Layout) -> GroupCensus:
    counts = {g: 0 for g in COMPUTE_GROUPS}
    for (r, c) in layout.compute_coords():
        for g in layout.cell(r, c).groups:
            counts[g] += 1
    return GroupCensus(n_t=layout.compute_count, counts=counts)


_COST_COMPONENTS = ("Arith", "Div", "FP", "Mult", "Other", "FIFO", "Empty", "IO")

_DEFAULT_AREA = {
    "Arith": 1.0,
    "FP": 4.4,
    "Mult": 6.2,
    "Div": 17.0,
    "Other": 12.3,
    "FIFO": 4.9,
    "Empty": 4.6,
    "IO": 11.9,
}


@dataclass(frozen=True)
class CostTable:
    """Normalized per-component area and power weights."""

    area: dict
    power: dict

    def __post_init__(self):
        for metric, table in (("area", self.area), ("power", self.power)):
            missing = [c for c in _COST_COMPONENTS if c not in table]
            if missing:
                raise LayoutError(f"cost table missing {metric} entries: {missing}")
            bad = [c for c in _COST_COMPONENTS if table[c] < 0]
            if bad:
                raise LayoutError(f"negative {metric} weights for: {bad}")

    @classmethod
    def default(cls, power_factor: float = 1.0) -> "CostTable":
        """Area weights from the built-in table; power = area x factor.

        No per-component power table is bundled, so power results follow the
        configured scaling unless a costs file provides real power weights.
        """
        area = dict(_DEFAULT_AREA)
        power = {k: v * power_factor for k, v in area.items()}
        return cls(area=area, power=power)

    @classmethod
    def from_text(cls, text: str) -> "CostTable":
        area: dict = {}
        power: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise LayoutError(
                    f"line {lineno}: expected '<component> <area> <power>', got {raw!r}"
                )
            name = parts[0]
            if name not in _COST_COMPONENTS:
                raise LayoutError(f"line {lineno}: unknown component {name!r}")
            if name in area:
                raise LayoutError(f"line {lineno}: duplicate component {name!r}")
            try:
                area[name] = float(parts[1])
                power[name] = float(parts[2])
            except ValueError:
                raise LayoutError(f"line {lineno}: bad weight in {raw!r}") from None
        return cls(area=area, power=power)

    @classmethod
    def from_file(cls, path) -> "CostTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def weights(self, metric: str) -> dict:
        if metric == "area":
            return self.area
        if metric == "power":
            return self.power
        raise ValueError(f"unknown metric {metric!r}")

    def group_cost(self, group: OpGroup, metric: str = "area") -> float:
        return self.weights(metric)[group.value]

    def fifo_port_cost(self, metric: str = "area") -> float:
        # The FIFO weight prices a full 4-port bank; pricing per port lets the
        # posteriori pruning account for individual removed ports.
        return self.weights(metric)["FIFO"] / 4.0

    def empty_cell_cost(self, metric: str = "area") -> float:
        return self.weights(metric)["Empty"]

    def io_cell_cost(self, metric: str = "area") -> float:
        return self.weights(metric)["IO"]

    def base_cell_cost(self, metric: str = "area") -> float:
        """Cost of a compute cell with all FIFO ports but no groups."""
        return self.empty_cell_cost(metric) + self.weights(metric)["FIFO"]


def layout_cost(
    layout: Layout,
    costs: CostTable,
    metric: str = "area",
    include_io: bool = False,
) -> float:
    """Total component cost over the compute cells.

    Per compute cell: empty-cell weight plus one FIFO-port weight per retained
    port; plus, summed over groups, instance count times the group weight.
    ``include_io`` adds a constant complete-I/O-cell weight per border cell
    for whole-array totals; the search objective leaves it off.
    """
    empty = costs.empty_cell_cost(metric)
    port = costs.fifo_port_cost(metric)
    total = 0.0
    for (r, c) in layout.compute_coords():
        total += empty + port * layout.cell(r, c).port_count()
    counts = census(layout).counts
    for g in COMPUTE_GROUPS:
        total += counts[g] * costs.group_cost(g, metric)
    if include_io:
        io = costs.io_cell_cost(metric)
        total += io * layout.io_count
    return total


def total_fifo_ports(layout: Layout) -> int:
    """All input FIFO ports on the grid: four per cell, I/O cells included."""
    return 4 * layout.rows * layout.cols


def serialize_layout(layout: Layout) -> str:
    lines = [f"layout {layout.rows} {layout.cols}"]
    for r in range(layout.rows):
        for c in range(layout.cols):
            cell = layout.cell(r, c)
            if cell.groups:
                groups = ",".join(g.value for g in GROUP_ORDER if g in cell.groups)
            else:
                groups = "-"
            mask = "".join(
                "1" if cell.fifo_mask >> d & 1 else "0" for d in range(4)
            )
            lines.append(f"cell {r} {c} {cell.kind.value} groups={groups} fifo={mask}")
    return "\n".join(lines) + "\n"


def parse_layout(text: str) -> Layout:
    rows = cols = None
    seen: dict[tuple[int, int], CellConfig] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "layout":
            if rows is not None:
                raise LayoutError(f"line {lineno}: duplicate 'layout' header")
            if len(parts) != 3:
                raise LayoutError(f"line {lineno}: expected 'layout <R> <C>'")
            try:
                rows, cols = int(parts[1]), int(parts[2])
            except ValueError:
                raise LayoutError(f"line {lineno}: bad dimensions") from None
        elif parts[0] == "cell":
            if rows is None:
                raise LayoutError(f"line {lineno}: 'cell' before 'layout' header")
            if len(parts) != 6:
                raise LayoutError(
                    f"line {lineno}: expected 'cell <r> <c> <kind> groups=.. fifo=..'"
                )
            try:
                r, c = int(parts[1]), int(parts[2])
            except ValueError:
                raise LayoutError(f"line {lineno}: bad cell coordinates") from None
            if not (0 <= r < rows and 0 <= c < cols):
                raise LayoutError(f"line {lineno}: cell ({r},{c}) outside {rows}x{cols}")
            if (r, c) in seen:
                raise LayoutError(f"line {lineno}: duplicate cell ({r},{c})")
            try:
                kind = CellKind(parts[3])
            except ValueError:
                raise LayoutError(f"line {lineno}: unknown cell kind {parts[3]!r}") from None
            if not parts[4].startswith("groups=") or not parts[5].startswith("fifo="):
                raise LayoutError(f"line {lineno}: expected groups=.. fifo=..")
            group_spec = parts[4][len("groups="):]
            if group_spec == "-":
                groups: frozenset = frozenset()
            else:
                groups = frozenset(group_from_name(n) for n in group_spec.split(","))
            mask_spec = parts[5][len("fifo="):]
            if len(mask_spec) != 4 or any(ch not in "01" for ch in mask_spec):
                raise LayoutError(f"line {lineno}: bad fifo mask {mask_spec!r}")
            mask = sum(1 << d for d, ch in enumerate(mask_spec) if ch == "1")
            try:
                seen[(r, c)] = CellConfig(kind, groups, mask)
            except LayoutError as exc:
                raise LayoutError(f"line {lineno}: {exc}") from None
        else:
            raise LayoutError(f"line {lineno}: unknown directive {parts[0]!r}")

    if rows is None:
        raise LayoutError("missing 'layout <R> <C>' header")
    if len(seen) != rows * cols:
        raise LayoutError(
            f"dimension mismatch: header says {rows}x{cols} ({rows * cols} cells), "
            f"found {len(seen)} cell records"
        )
    cells = [seen[(r, c)] for r in range(rows) for c in range(cols)]
    return Layout(rows, cols, cells)


def parse_layout_file(path) -> Layout:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_layout(fh.read())


def default_cost_table() -> CostTable:
    data = resources.files("hetgrid").joinpath("data/costs.txt").read_text()
    return CostTable.from_text(data)
