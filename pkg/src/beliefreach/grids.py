"""Rectilinear grids, level-set fields, reach tubes, and occupancy slices.

Sign convention: a point belongs to the set encoded by a field iff the
(interpolated) value there is <= 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import RejectedInputError

# Belief coordinates are kept strictly inside the open simplex so the
# Bayesian dynamics stay well-posed on the grid.
P_MIN = 1e-3

DEFAULT_AXIS_NAMES = {2: ("x", "y"), 3: ("x", "y", "p")}


@dataclass(frozen=True)
class Grid:
    """Node-centered rectilinear grid over a 2-D or 3-D box."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    counts: tuple[int, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        dims = len(self.counts)
        if not (len(self.mins) == len(self.maxs) == dims):
            raise RejectedInputError("mins/maxs/counts must have equal length")
        if dims not in (2, 3):
            raise RejectedInputError(f"grid must be 2-D or 3-D, got {dims}-D")
        if not self.names:
            object.__setattr__(self, "names", DEFAULT_AXIS_NAMES[dims])
        if len(self.names) != dims:
            raise RejectedInputError("names must match the axis count")
        for d in range(dims):
            if self.counts[d] < 3:
                raise RejectedInputError(f"axis {d}: need at least 3 nodes")
            if not self.maxs[d] > self.mins[d]:
                raise RejectedInputError(f"axis {d}: max must exceed min")
            if self.names[d] == "p":
                if self.mins[d] < P_MIN - 1e-12 or self.maxs[d] > 1.0 - P_MIN + 1e-12:
                    raise RejectedInputError(
                        f"belief axis bounds must lie inside [{P_MIN}, {1-P_MIN}]"
                    )

    @property
    def dims(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (self.maxs[d] - self.mins[d]) / (self.counts[d] - 1)
            for d in range(self.dims)
        )

    def axis(self, d: int) -> np.ndarray:
        return np.linspace(self.mins[d], self.maxs[d], self.counts[d])

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*(self.axis(d) for d in range(self.dims)), indexing="ij")

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dims,):
            return False
        return bool(
            np.all(point >= np.asarray(self.mins) - 1e-12)
            and np.all(point <= np.asarray(self.maxs) + 1e-12)
        )

    def nearest_index(self, point) -> tuple[int, ...]:
        point = np.asarray(point, dtype=float)
        idx = []
        for d in range(self.dims):
            i = int(round((point[d] - self.mins[d]) / self.spacing[d]))
            idx.append(min(max(i, 0), self.counts[d] - 1))
        return tuple(idx)

    def node(self, idx) -> np.ndarray:
        return np.array(
            [self.mins[d] + idx[d] * self.spacing[d] for d in range(self.dims)]
        )

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def spec(self) -> dict:
        return {
            "mins": list(self.mins),
            "maxs": list(self.maxs),
            "counts": list(self.counts),
            "names": list(self.names),
        }

    @staticmethod
    def from_spec(spec: dict) -> "Grid":
        return Grid(
            tuple(float(v) for v in spec["mins"]),
            tuple(float(v) for v in spec["maxs"]),
            tuple(int(v) for v in spec["counts"]),
            tuple(spec.get("names", ())),
        )


def interpolate(grid: Grid, values: np.ndarray, point) -> float:
    """Multilinear interpolation of node values at an interior point."""
    point = np.asarray(point, dtype=float)
    if not grid.contains(point):
        raise RejectedInputError(f"point {point.tolist()} is outside the grid bounds")
    los, weights = [], []
    for d in range(grid.dims):
        t = (point[d] - grid.mins[d]) / grid.spacing[d]
        lo = min(int(np.floor(t)), grid.counts[d] - 2)
        lo = max(lo, 0)
        los.append(lo)
        weights.append(min(max(t - lo, 0.0), 1.0))
    out = 0.0
    for corner in range(2 ** grid.dims):
        w = 1.0
        idx = []
        for d in range(grid.dims):
            bit = (corner >> d) & 1
            idx.append(los[d] + bit)
            w *= weights[d] if bit else 1.0 - weights[d]
        out += w * float(values[tuple(idx)])
    return out


@dataclass(frozen=True)
class LevelSetField:
    """Scalar values sampled on a grid at a single time stamp."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.shape:
            raise RejectedInputError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise RejectedInputError("field values must be finite everywhere")

    def inside(self) -> np.ndarray:
        """Boolean mask of sub-zero (inside) nodes."""
        return self.values <= 0.0

    def area(self) -> float:
        """Node-count estimate of the set volume (D3: count * cell volume)."""
        return float(np.count_nonzero(self.inside())) * self.grid.cell_volume()


@dataclass(frozen=True)
class ReachTube:
    """Time-ordered level-set snapshots on one grid with uniform spacing."""

    slices: tuple[LevelSetField, ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if not self.slices:
            raise RejectedInputError("a tube needs at least one slice")
        times = [s.time for s in self.slices]
        for k in range(1, len(times)):
            if not np.isclose(times[k] - times[k - 1], self.dt, atol=1e-9):
                raise RejectedInputError("slice times must increase by dt exactly")
        grid = self.slices[0].grid
        for s in self.slices:
            if s.grid != grid:
                raise RejectedInputError("all slices must share one grid")

    @property
    def grid(self) -> Grid:
        return self.slices[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.slices])


@dataclass(frozen=True)
class OccupancySlice:
    """Probability mass per grid cell at one time stamp (cells centered on nodes)."""

    grid: Grid
    mass: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "mass", mass)
        if self.grid.dims != 2:
            raise RejectedInputError("occupancy slices live on 2-D grids")
        if mass.shape != self.grid.shape:
            raise RejectedInputError("mass shape does not match grid")
        if np.any(mass < 0):
            raise RejectedInputError("mass must be nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > 1e-6:
            raise RejectedInputError(f"total mass {total} is not 1 within 1e-6")


def make_ball_field(grid: Grid, center, radius: float) -> LevelSetField:
    """Signed distance to a sphere of the given radius, sampled at the nodes."""
    center = np.asarray(center, dtype=float)
    if not grid.contains(center):
        raise RejectedInputError(f"center {center.tolist()} is outside the grid")
    if radius <= 0:
        raise RejectedInputError("radius must be positive")
    mesh = grid.meshgrid()
    sq = np.zeros(grid.shape)
    for d in range(grid.dims):
        sq += (mesh[d] - center[d]) ** 2
    return LevelSetField(grid, np.sqrt(sq) - radius, time=0.0)


def make_ellipsoid_field(grid: Grid, center, radii) -> LevelSetField:
    """Axis-aligned ellipsoid level set, scaled so the value is distance-like.

    Used instead of a plain ball when the grid axes carry incommensurate units
    (meters vs. probability): the set extends a fixed number of cells per axis.
    """
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if not grid.contains(center):
        raise RejectedInputError(f"center {center.tolist()} is outside the grid")
    if radii.shape != (grid.dims,) or np.any(radii <= 0):
        raise RejectedInputError("need one positive radius per axis")
    mesh = grid.meshgrid()
    sq = np.zeros(grid.shape)
    for d in range(grid.dims):
        sq += ((mesh[d] - center[d]) / radii[d]) ** 2
    return LevelSetField(grid, (np.sqrt(sq) - 1.0) * float(radii.min()), time=0.0)


def default_init_radius(grid: Grid) -> float:
    """Ball radius for point initial states: 2 cells of the coarsest axis (D1)."""
    return 2.0 * max(grid.spacing)


def set_membership(fld: LevelSetField, point) -> bool:
    """True iff the multilinearly interpolated value at the point is <= 0."""
    return interpolate(fld.grid, fld.values, point) <= 0.0


def project_to_human_space(tube: ReachTube, human_axes=(0, 1)) -> ReachTube:
    """Project a joint-space tube onto the human axes (min over the rest).

    The pointwise minimum realizes the union over the projected-out axes under
    the sub-zero membership convention.
    """
    human_axes = tuple(human_axes)
    grid = tube.grid
    all_axes = tuple(range(grid.dims))
    if not set(human_axes) < set(all_axes):
        raise RejectedInputError(
            f"human axes {human_axes} must be a strict subset of {all_axes}"
        )
    drop = tuple(d for d in all_axes if d not in human_axes)
    sub = Grid(
        tuple(grid.mins[d] for d in human_axes),
        tuple(grid.maxs[d] for d in human_axes),
        tuple(grid.counts[d] for d in human_axes),
        tuple(grid.names[d] for d in human_axes),
    )
    slices = [
        LevelSetField(sub, s.values.min(axis=drop), time=s.time) for s in tube.slices
    ]
    return ReachTube(tuple(slices), dt=tube.dt)


# ---------------------------------------------------------------------------
# Field export: flat CSV (one row per node) + JSON sidecar with the grid spec.
# ---------------------------------------------------------------------------

def export_field(fld: LevelSetField, csv_path, json_path=None) -> None:
    csv_path = Path(csv_path)
    mesh = fld.grid.meshgrid()
    cols = [m.ravel() for m in mesh] + [fld.values.ravel()]
    header = ",".join(list(fld.grid.names) + ["value"])
    np.savetxt(
        csv_path,
        np.column_stack(cols),
        fmt="%.17g",
        delimiter=",",
        header=header,
        comments="",
    )
    if json_path is not None:
        sidecar = {"grid": fld.grid.spec(), "time": fld.time}
        Path(json_path).write_text(json.dumps(sidecar, sort_keys=True, indent=1))


def import_field(csv_path, json_path) -> LevelSetField:
    sidecar = json.loads(Path(json_path).read_text())
    grid = Grid.from_spec(sidecar["grid"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    values = data[:, -1].reshape(grid.shape)
    return LevelSetField(grid, values, time=float(sidecar["time"]))
