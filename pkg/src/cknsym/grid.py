"""Cartesian ball grids: masked cube discretizations with exact shift algebra.

Fields live on a uniform grid over the cube [-radius, radius]^n and are
forced to zero outside the open inscribed ball.  The point count per axis is
odd so the origin is a node and every coordinate flip is an exact index
reversal; the outermost index layer always lies outside the ball, which
makes np.roll a safe (exact) shift: wraparound only ever transports zeros.

Differences come in forward/backward pairs with exact adjoints, so energy
gradients can be assembled without any boundary bookkeeping.  Quadrature is
midpoint; radial weights |x|^(-c) are tabulated with the radius floored at
h*sqrt(n)/4 (the midpoint between the origin cell's center and its farthest
corner) so the origin cell carries a finite representative value instead of
a singularity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

MAX_DIM = 6
FIELD_FORMAT = "cknsym-field"
FIELD_VERSION = 1


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BallGrid:
    n: int
    points_per_axis: int
    radius: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not 1 <= self.n <= MAX_DIM:
            raise GridError(f"dimension must be an integer in 1..{MAX_DIM}, got {self.n}")
        if not isinstance(self.points_per_axis, int) or self.points_per_axis < 5:
            raise GridError(f"points_per_axis must be an integer >= 5, got {self.points_per_axis}")
        if self.points_per_axis % 2 == 0:
            raise GridError("points_per_axis must be odd so the origin is a node")
        if not self.radius > 0:
            raise GridError(f"radius must be positive, got {self.radius}")

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points_per_axis)

    @property
    def h(self) -> float:
        return 2.0 * self.radius / (self.points_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @cached_property
    def coords(self) -> np.ndarray:
        """Shape (n,) + shape; coords[i] is the i-th coordinate at every node."""
        grids = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(grids)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coords ** 2, axis=0))

    @cached_property
    def mask(self) -> np.ndarray:
        m = self.radii < self.radius
        for ax in range(self.n):
            edge = [slice(None)] * self.n
            for idx in (0, -1):
                edge[ax] = idx
                if m[tuple(edge)].any():
                    raise GridError("interior reaches the outer index layer")
        return m

    @cached_property
    def mask_f(self) -> np.ndarray:
        return self.mask.astype(float)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @cached_property
    def interior_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def points(self) -> np.ndarray:
        """All nodes as an (N^n, n) array, C order."""
        return self.coords.reshape(self.n, -1).T

    def weight_values(self, exponent: float) -> np.ndarray:
        """|x|^(-exponent), regularized on the origin cell.

        The origin node is evaluated at the midpoint between the cell center
        and its farthest corner, i.e. at radius h*sqrt(n)/4, which keeps the
        quadrature finite and refines consistently.  Every other node sits at
        radius >= h and is unaffected.
        """
        if exponent == 0.0:
            return np.ones(self.shape)
        r = np.maximum(self.radii, self.h * math.sqrt(self.n) / 4.0)
        return r ** (-exponent)

    def quadrature(self, values: np.ndarray, weight_exponent: float = 0.0) -> float:
        v = values * self.mask_f
        if weight_exponent != 0.0:
            v = v * self.weight_values(weight_exponent)
        return float(self.cell_volume * np.sum(v))


def field_from_function(grid: BallGrid, fn) -> np.ndarray:
    """Sample fn at interior nodes (zero outside); fn maps (m, n) points to m values."""
    pts = grid.points()
    vals = np.asarray(fn(pts), dtype=float).reshape(grid.shape)
    return np.where(grid.mask, vals, 0.0)


def forward_diffs(grid: BallGrid, values: np.ndarray) -> np.ndarray:
    """Stack of (u(x + h e_i) - u(x)) / h over axes, shape (n,) + grid.shape."""
    h = grid.h
    return np.stack([(np.roll(values, -1, axis=i) - values) / h for i in range(grid.n)])


def backward_diffs(grid: BallGrid, values: np.ndarray) -> np.ndarray:
    h = grid.h
    return np.stack([(values - np.roll(values, 1, axis=i)) / h for i in range(grid.n)])


def forward_diffs_adjoint(grid: BallGrid, stack: np.ndarray) -> np.ndarray:
    """Exact adjoint of forward_diffs under the plain node inner product."""
    h = grid.h
    out = np.zeros(grid.shape)
    for i in range(grid.n):
        out += (np.roll(stack[i], 1, axis=i) - stack[i]) / h
    return out


def backward_diffs_adjoint(grid: BallGrid, stack: np.ndarray) -> np.ndarray:
    h = grid.h
    out = np.zeros(grid.shape)
    for i in range(grid.n):
        out += (stack[i] - np.roll(stack[i], -1, axis=i)) / h
    return out


# --------------------------------------------------------------------------
# persistence: one JSON header line, then raw little-endian float64, C order


def save_field(path: str | Path, grid: BallGrid, values: np.ndarray) -> None:
    if values.shape != grid.shape:
        raise GridError(f"field shape {values.shape} does not match grid {grid.shape}")
    header = {
        "format": FIELD_FORMAT,
        "version": FIELD_VERSION,
        "n": grid.n,
        "points_per_axis": grid.points_per_axis,
        "radius": grid.radius,
        "dtype": "<f8",
    }
    payload = np.ascontiguousarray(values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(payload)


def load_field(path: str | Path) -> tuple[BallGrid, np.ndarray]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GridError(f"unreadable field header: {exc}") from exc
    if header.get("format") != FIELD_FORMAT:
        raise GridError(f"not a field file: format={header.get('format')!r}")
    if header.get("version") != FIELD_VERSION:
        raise GridError(f"unsupported field version {header.get('version')!r}")
    grid = BallGrid(int(header["n"]), int(header["points_per_axis"]), float(header["radius"]))
    expected = int(np.prod(grid.shape)) * 8
    if len(payload) != expected:
        raise GridError(f"field payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape).copy()
    return grid, values
