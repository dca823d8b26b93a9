"""Patch geometry, sensor sets and probe plans.

All lengths are millimetres. The origin is a patch corner, x runs along the
long (152.4 mm) axis and y across the short axis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PATCH_WIDTH_MM = 152.4
PATCH_HEIGHT_MM = 25.4

# Patch B default transmit coordinates. Only the end electrodes (5.5 and
# 148.4 mm) and the spacing range (3.2 .. 28.6 mm) are known; the interior
# positions are a fixture that honours both. Density falls along x.
PATCH_B_TRANSMIT_X_MM = (5.5, 8.7, 13.7, 21.7, 33.7, 49.7, 70.0, 98.6, 124.0, 148.4)
PATCH_B_RECEIVE_Y_MM = (7.2, 13.5, 19.8)

GRID_TOL_MM = 1e-9


def _as_frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PatchLayout:
    """Rectangular patch with crossing transmit/receive electrodes.

    ``transmit_x_mm`` are electrode coordinates along the long axis,
    ``receive_y_mm`` along the short axis; each crossing is one sensor.
    """

    width_mm: float
    height_mm: float
    transmit_x_mm: tuple[float, ...]
    receive_y_mm: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "transmit_x_mm", tuple(float(v) for v in self.transmit_x_mm))
        object.__setattr__(self, "receive_y_mm", tuple(float(v) for v in self.receive_y_mm))
        if not (self.width_mm > 0 and self.height_mm > 0):
            raise ValueError(f"patch dimensions must be positive, got {self.width_mm} x {self.height_mm}")
        for name, coords, upper in (
            ("transmit_x_mm", self.transmit_x_mm, self.width_mm),
            ("receive_y_mm", self.receive_y_mm, self.height_mm),
        ):
            if not coords:
                raise ValueError(f"{name} is empty")
            if any(not (0.0 < c < upper) for c in coords):
                raise ValueError(f"{name} must lie strictly inside (0, {upper}) mm: {coords}")
            if any(b <= a for a, b in zip(coords, coords[1:])):
                raise ValueError(f"{name} must be strictly increasing: {coords}")

    @property
    def n_sensors(self) -> int:
        return len(self.transmit_x_mm) * len(self.receive_y_mm)

    def sensors(self) -> "SensorSet":
        """Sensor positions at every electrode crossing.

        Sensors are numbered transmit-major; within one transmit electrode the
        receive electrodes are visited from the far edge (largest y) inwards, so
        on Patch B sensor id 0 sits at (5.5, 19.8) and id 29 at (148.4, 7.2).
        """
        positions = [(x, y) for x in self.transmit_x_mm for y in reversed(self.receive_y_mm)]
        return SensorSet(positions_mm=_as_frozen_array(positions, (-1, 2)))

    def contains(self, points, tol: float = GRID_TOL_MM) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (p[:, 0] >= -tol)
            & (p[:, 0] <= self.width_mm + tol)
            & (p[:, 1] >= -tol)
            & (p[:, 1] <= self.height_mm + tol)
        )

    def swapped(self) -> "PatchLayout":
        """The same patch with its axes exchanged (receive becomes transmit)."""
        return PatchLayout(self.height_mm, self.width_mm, self.receive_y_mm, self.transmit_x_mm)


@dataclass(frozen=True)
class SensorSet:
    positions_mm: np.ndarray
    ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        pos = _as_frozen_array(self.positions_mm, (-1, 2))
        object.__setattr__(self, "positions_mm", pos)
        if not self.ids:
            object.__setattr__(self, "ids", tuple(range(len(pos))))
        if len(self.ids) != len(pos) or len(set(self.ids)) != len(self.ids):
            raise ValueError("sensor ids must be unique, one per position")

    def __len__(self) -> int:
        return len(self.ids)

    def position(self, sensor_id: int) -> tuple[float, float]:
        x, y = self.positions_mm[self.ids.index(sensor_id)]
        return float(x), float(y)


@dataclass(frozen=True)
class ProbePlan:
    """Rectilinear grid of probe positions.

    Locations are ordered row-major: index ``r * cols + c`` is the probe at
    ``(x_mm[c], y_mm[r])``. Rows run across the short axis.
    """

    x_mm: np.ndarray
    y_mm: np.ndarray

    def __post_init__(self):
        x = _as_frozen_array(self.x_mm).ravel()
        y = _as_frozen_array(self.y_mm).ravel()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x_mm", x)
        object.__setattr__(self, "y_mm", y)
        for name, nodes in (("x_mm", x), ("y_mm", y)):
            if nodes.size and np.any(np.diff(nodes) <= 0):
                raise ValueError(f"probe plan {name} nodes must be strictly increasing")

    @property
    def rows(self) -> int:
        return len(self.y_mm)

    @property
    def cols(self) -> int:
        return len(self.x_mm)

    def __len__(self) -> int:
        return self.rows * self.cols

    @property
    def locations_mm(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x_mm, self.y_mm)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def cell(self, index: int) -> tuple[int, int]:
        return divmod(index, self.cols)


def make_patch_a() -> PatchLayout:
    """Uniform patch: 11 transmit electrodes at 13.5 mm pitch, 2 receive at 10 mm."""
    pitch_x, pitch_y = 13.5, 10.0
    x0 = (PATCH_WIDTH_MM - 10 * pitch_x) / 2
    y0 = (PATCH_HEIGHT_MM - pitch_y) / 2
    tx = [round(x0 + i * pitch_x, 9) for i in range(11)]
    rx = [round(y0 + j * pitch_y, 9) for j in range(2)]
    return PatchLayout(PATCH_WIDTH_MM, PATCH_HEIGHT_MM, tx, rx)


def make_patch_b(transmit_x_mm: Sequence[float] = PATCH_B_TRANSMIT_X_MM) -> PatchLayout:
    """Variable-density patch: 10 irregular transmit electrodes, 3 receive at 6.3 mm."""
    return PatchLayout(PATCH_WIDTH_MM, PATCH_HEIGHT_MM, transmit_x_mm, PATCH_B_RECEIVE_Y_MM)


def uniform_probe_plan(layout: PatchLayout, rows: int, cols: int) -> ProbePlan:
    """Cell-centred equispaced probe grid covering the patch.

    Each location is the centre of one of ``rows x cols`` equal cells, so the
    outermost probes sit half a cell in from the patch edge.
    """
    if rows < 2 or cols < 2:
        raise ValueError(f"probe plan needs rows >= 2 and cols >= 2, got rows={rows} cols={cols}")
    x = (np.arange(cols) + 0.5) * (layout.width_mm / cols)
    y = (np.arange(rows) + 0.5) * (layout.height_mm / rows)
    plan = ProbePlan(x, y)
    assert layout.contains(plan.locations_mm).all()
    return plan


BUILTIN_LAYOUTS = {"patch-a": make_patch_a, "patch-b": make_patch_b}


def layout_to_dict(layout: PatchLayout) -> dict:
    to_cm = lambda v: round(v / 10.0, 10)  # noqa: E731
    return {
        "width_cm": to_cm(layout.width_mm),
        "height_cm": to_cm(layout.height_mm),
        "transmit_x_cm": [to_cm(v) for v in layout.transmit_x_mm],
        "receive_y_cm": [to_cm(v) for v in layout.receive_y_mm],
    }


def layout_from_dict(doc: dict) -> PatchLayout:
    to_mm = lambda v: round(float(v) * 10.0, 9)  # noqa: E731
    try:
        return PatchLayout(
            width_mm=to_mm(doc["width_cm"]),
            height_mm=to_mm(doc["height_cm"]),
            transmit_x_mm=[to_mm(v) for v in doc["transmit_x_cm"]],
            receive_y_mm=[to_mm(v) for v in doc["receive_y_cm"]],
        )
    except KeyError as exc:
        raise ValueError(f"layout document missing field {exc.args[0]!r}") from None


def load_layout(path) -> PatchLayout:
    with open(path) as fh:
        return layout_from_dict(json.load(fh))


def dumps_layout(layout: PatchLayout) -> str:
    return json.dumps(layout_to_dict(layout), indent=2) + "\n"


def resolve_layout(source: str) -> PatchLayout:
    """Builtin name (``patch-a``/``patch-b``) or path to a layout JSON file."""
    if source in BUILTIN_LAYOUTS:
        return BUILTIN_LAYOUTS[source]()
    if not Path(source).exists():
        raise FileNotFoundError(f"layout {source!r} is neither a builtin ({', '.join(BUILTIN_LAYOUTS)}) nor a file")
    return load_layout(source)
