"""
Planar geometry for one network instance.

Nodes are finite homogeneous Poisson point processes on a disk, blockers are
germ-grain walls and tree lines are line segments with a foliage depth.
Densities are given per km^2 and coordinates in meters; Region owns the
conversion between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateSegmentError, InfeasibleRegionError, ParameterError

Point = Tuple[float, float]

# Upper bound on link x segment cells evaluated in one vectorized block.
_BLOCK_CELLS = 2_000_000
MAX_REDRAWS = 10_000


@dataclass(frozen=True)
class Region:
    radius: float
    center: Point = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ParameterError(f"region radius must be > 0, got {self.radius}")

    @classmethod
    def from_area_km2(cls, area_km2: float, center: Point = (0.0, 0.0)) -> "Region":
        if not area_km2 > 0:
            raise ParameterError(f"region area must be > 0, got {area_km2}")
        return cls(radius=math.sqrt(area_km2 * 1e6 / math.pi), center=center)

    @property
    def area_m2(self) -> float:
        return math.pi * self.radius**2

    @property
    def area_km2(self) -> float:
        return self.area_m2 / 1e6

    def expected_count(self, density_km2: float) -> float:
        return density_km2 * self.area_km2

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return d <= self.radius * (1 + 1e-12)

    def clamp(self, points: np.ndarray) -> np.ndarray:
        """Project points lying outside the disk radially back onto its boundary."""
        pts = np.array(points, dtype=float, copy=True).reshape(-1, 2)
        c = np.asarray(self.center, dtype=float)
        off = pts - c
        dist = np.hypot(off[:, 0], off[:, 1])
        outside = dist > self.radius
        if np.any(outside):
            off[outside] *= (self.radius / dist[outside])[:, None]
            pts[outside] = c + off[outside]
        return pts


@dataclass(frozen=True)
class PointProcessParams:
    """Densities in km^-2. Defaults are the dense-urban simulation setup."""

    lambda_m: float = 2.0
    lambda_s: float = 50.0
    lambda_u: float = 500.0
    lambda_bl: float = 500.0
    lambda_t: float = 0.0
    lambda_temp: float = 0.0

    def __post_init__(self) -> None:
        for name in ("lambda_m", "lambda_s", "lambda_u", "lambda_bl", "lambda_t", "lambda_temp"):
            value = getattr(self, name)
            if value < 0:
                raise ParameterError(f"{name} must be >= 0, got {value}", detail={"field": name})


@dataclass(frozen=True)
class Wall:
    midpoint: Point
    length: float
    orientation: float

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ParameterError(f"wall length must be > 0, got {self.length}")
        if not 0.0 <= self.orientation < math.pi:
            raise ParameterError(f"wall orientation must lie in [0, pi), got {self.orientation}")

    @property
    def endpoints(self) -> Tuple[Point, Point]:
        return _endpoints(self.midpoint, self.length, self.orientation)


@dataclass(frozen=True)
class TreeLine:
    midpoint: Point
    length: float
    orientation: float
    in_leaf: bool
    depth: float

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ParameterError(f"tree line length must be > 0, got {self.length}")
        if not self.depth > 0:
            raise ParameterError(f"vegetation depth must be > 0, got {self.depth}")

    @property
    def endpoints(self) -> Tuple[Point, Point]:
        return _endpoints(self.midpoint, self.length, self.orientation)


def _endpoints(mid: Point, length: float, theta: float) -> Tuple[Point, Point]:
    hx = 0.5 * length * math.cos(theta)
    hy = 0.5 * length * math.sin(theta)
    return (mid[0] - hx, mid[1] - hy), (mid[0] + hx, mid[1] + hy)


def segments_array(items: Iterable[object]) -> np.ndarray:
    """Stack walls or tree lines into an (n, 4) array of x0, y0, x1, y1."""
    rows = [(*a, *b) for a, b in (item.endpoints for item in items)]  # type: ignore[attr-defined]
    if not rows:
        return np.zeros((0, 4))
    return np.asarray(rows, dtype=float)


def _frozen(points: Optional[np.ndarray]) -> np.ndarray:
    arr = np.zeros((0, 2)) if points is None else np.array(points, dtype=float).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """One Monte Carlo draw: node positions, walls and tree lines."""

    region: Region
    mbs: np.ndarray
    sbs: np.ndarray
    ues: np.ndarray
    walls: Tuple[Wall, ...] = ()
    trees: Tuple[TreeLine, ...] = ()
    temporal_walls: Tuple[Wall, ...] = ()
    _blockers: np.ndarray = field(init=False, repr=False, compare=False)
    _tree_segments: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mbs", _frozen(self.mbs))
        object.__setattr__(self, "sbs", _frozen(self.sbs))
        object.__setattr__(self, "ues", _frozen(self.ues))
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "temporal_walls", tuple(self.temporal_walls))
        blockers = segments_array(self.walls + self.temporal_walls)
        blockers.setflags(write=False)
        trees = segments_array(self.trees)
        trees.setflags(write=False)
        object.__setattr__(self, "_blockers", blockers)
        object.__setattr__(self, "_tree_segments", trees)

    @property
    def blocker_segments(self) -> np.ndarray:
        return self._blockers

    @property
    def tree_segments(self) -> np.ndarray:
        return self._tree_segments

    @property
    def n_mbs(self) -> int:
        return len(self.mbs)

    @property
    def n_sbs(self) -> int:
        return len(self.sbs)

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    def with_sbs(self, sbs: np.ndarray) -> "NetworkInstance":
        return replace(self, sbs=np.asarray(sbs, dtype=float))

    def with_temporal_walls(self, walls: Sequence[Wall]) -> "NetworkInstance":
        return replace(self, temporal_walls=tuple(self.temporal_walls) + tuple(walls))

    def without_temporal_walls(self) -> "NetworkInstance":
        return replace(self, temporal_walls=())


@dataclass(frozen=True)
class BlockerGeometry:
    """Shape parameters for walls and tree lines."""

    wall_length: float = 5.0
    tree_length: float = 15.0
    tree_depth: float = 7.5
    in_leaf_fraction: float = 0.15

    def __post_init__(self) -> None:
        if not self.wall_length > 0:
            raise ParameterError(f"wall_length must be > 0, got {self.wall_length}")
        if not self.tree_length > 0:
            raise ParameterError(f"tree_length must be > 0, got {self.tree_length}")
        if not self.tree_depth > 0:
            raise ParameterError(f"tree_depth must be > 0, got {self.tree_depth}")
        if not 0.0 <= self.in_leaf_fraction <= 1.0:
            raise ParameterError(f"in_leaf_fraction must lie in [0, 1], got {self.in_leaf_fraction}")


# --- sampling ---------------------------------------------------------------


def sample_uniform_disk(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. points uniform on the disk (polar inverse-CDF)."""
    if n < 0:
        raise ParameterError(f"point count must be >= 0, got {n}")
    r = region.radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    pts = np.empty((n, 2))
    pts[:, 0] = region.center[0] + r * np.cos(theta)
    pts[:, 1] = region.center[1] + r * np.sin(theta)
    return pts


def sample_ppp(region: Region, density_km2: float, rng: np.random.Generator) -> np.ndarray:
    if density_km2 < 0:
        raise ParameterError(f"density must be >= 0, got {density_km2}")
    if density_km2 == 0:
        return np.zeros((0, 2))
    n = int(rng.poisson(region.expected_count(density_km2)))
    return sample_uniform_disk(region, n, rng)


def sample_blockers(
    region: Region, density_km2: float, wall_length: float, rng: np.random.Generator
) -> Tuple[Wall, ...]:
    """Germ-grain walls: FHPPP midpoints, uniform orientation on [0, pi)."""
    if not wall_length > 0:
        raise ParameterError(f"wall length must be > 0, got {wall_length}")
    mids = sample_ppp(region, density_km2, rng)
    thetas = rng.uniform(0.0, np.pi, size=len(mids))
    return tuple(
        Wall(midpoint=(float(m[0]), float(m[1])), length=wall_length, orientation=float(t))
        for m, t in zip(mids, thetas)
    )


def sample_trees(
    region: Region, density_km2: float, geometry: BlockerGeometry, rng: np.random.Generator
) -> Tuple[TreeLine, ...]:
    mids = sample_ppp(region, density_km2, rng)
    thetas = rng.uniform(0.0, np.pi, size=len(mids))
    leaves = rng.random(len(mids)) < geometry.in_leaf_fraction
    return tuple(
        TreeLine(
            midpoint=(float(m[0]), float(m[1])),
            length=geometry.tree_length,
            orientation=float(t),
            in_leaf=bool(leaf),
            depth=geometry.tree_depth,
        )
        for m, t, leaf in zip(mids, thetas, leaves)
    )


def sample_instance(
    region: Region,
    params: PointProcessParams,
    geometry: BlockerGeometry,
    rng: np.random.Generator,
    min_mbs: int = 0,
) -> NetworkInstance:
    """
    Sample every layer of an instance from independent child streams, so that
    changing one density never moves the points of another layer.

    With ``min_mbs`` the MBS layer is redrawn until it holds at least that
    many points (the process conditioned on a minimum count).
    """
    mbs_rng, sbs_rng, ue_rng, wall_rng, tree_rng = rng.spawn(5)
    if min_mbs > 0 and params.lambda_m == 0:
        raise ParameterError("lambda_m is 0 but at least one MBS is required", detail={"field": "lambda_m"})
    mbs = sample_ppp(region, params.lambda_m, mbs_rng)
    for _ in range(MAX_REDRAWS):
        if len(mbs) >= min_mbs:
            break
        mbs = sample_ppp(region, params.lambda_m, mbs_rng)
    else:
        raise InfeasibleRegionError(f"could not draw {min_mbs} MBSs in {MAX_REDRAWS} attempts")
    return NetworkInstance(
        region=region,
        mbs=mbs,
        sbs=sample_ppp(region, params.lambda_s, sbs_rng),
        ues=sample_ppp(region, params.lambda_u, ue_rng),
        walls=sample_blockers(region, params.lambda_bl, geometry.wall_length, wall_rng),
        trees=sample_trees(region, params.lambda_t, geometry, tree_rng),
    )


# --- intersection queries ---------------------------------------------------


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _intersects(links: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Closed-segment intersection of every link (L, 4) with every segment (W, 4)."""
    p1x, p1y, p2x, p2y = (links[:, i][:, None] for i in range(4))
    q1x, q1y, q2x, q2y = (segs[:, i][None, :] for i in range(4))
    d1 = _orient(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _orient(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _orient(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _orient(p1x, p1y, p2x, p2y, q2x, q2y)
    hit = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    collinear = (d1 == 0) & (d2 == 0)
    if np.any(collinear):
        overlap = (
            (np.minimum(p1x, p2x) <= np.maximum(q1x, q2x))
            & (np.minimum(q1x, q2x) <= np.maximum(p1x, p2x))
            & (np.minimum(p1y, p2y) <= np.maximum(q1y, q2y))
            & (np.minimum(q1y, q2y) <= np.maximum(p1y, p2y))
        )
        hit &= ~collinear | overlap
    return hit


def crossing_matrix(links: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Boolean (L, W) matrix, True where link l touches segment w."""
    links = np.asarray(links, dtype=float).reshape(-1, 4)
    segs = np.asarray(segs, dtype=float).reshape(-1, 4)
    out = np.zeros((len(links), len(segs)), dtype=bool)
    if len(links) == 0 or len(segs) == 0:
        return out
    step = max(1, _BLOCK_CELLS // len(segs))
    for start in range(0, len(links), step):
        out[start : start + step] = _intersects(links[start : start + step], segs)
    return out


def link_array(tx: np.ndarray, rx: np.ndarray) -> np.ndarray:
    """All tx -> rx pairs as an (T*R, 4) segment array, tx-major."""
    tx = np.asarray(tx, dtype=float).reshape(-1, 2)
    rx = np.asarray(rx, dtype=float).reshape(-1, 2)
    t = np.repeat(tx, len(rx), axis=0)
    r = np.tile(rx, (len(tx), 1))
    return np.hstack([t, r])


def los_matrix(tx: np.ndarray, rx: np.ndarray, blockers: np.ndarray) -> np.ndarray:
    """(T, R) LoS flags between every tx and rx point."""
    n_tx, n_rx = len(np.reshape(tx, (-1, 2))), len(np.reshape(rx, (-1, 2)))
    blocked = crossing_matrix(link_array(tx, rx), blockers).any(axis=1)
    return ~blocked.reshape(n_tx, n_rx)


def _check_segment(a: Point, b: Point) -> None:
    if float(a[0]) == float(b[0]) and float(a[1]) == float(b[1]):
        raise DegenerateSegmentError(f"degenerate segment: endpoints coincide at {tuple(a)}")


def is_los(a: Point, b: Point, walls: Sequence[Wall]) -> bool:
    _check_segment(a, b)
    segs = segments_array(walls)
    link = np.array([[a[0], a[1], b[0], b[1]]], dtype=float)
    return not bool(crossing_matrix(link, segs).any())


def tree_crossings(a: Point, b: Point, trees: Sequence[TreeLine]) -> List[TreeLine]:
    _check_segment(a, b)
    trees = list(trees)
    link = np.array([[a[0], a[1], b[0], b[1]]], dtype=float)
    hits = crossing_matrix(link, segments_array(trees))[0]
    return [tree for tree, hit in zip(trees, hits) if hit]


# --- forbidden zones ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ForbiddenZones:
    """Axis-aligned square cells (xmin, ymin, xmax, ymax) where placement is not allowed."""

    cells: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=float).reshape(-1, 4))

    @property
    def empty(self) -> bool:
        return len(self.cells) == 0

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.empty or len(pts) == 0:
            return np.zeros(len(pts), dtype=bool)
        x = pts[:, 0][:, None]
        y = pts[:, 1][:, None]
        c = self.cells
        inside = (x >= c[:, 0]) & (x < c[:, 2]) & (y >= c[:, 1]) & (y < c[:, 3])
        return inside.any(axis=1)


def sample_forbidden_zones(
    region: Region, fraction: float, cell_size: float, rng: np.random.Generator
) -> ForbiddenZones:
    """Pick random grid cells (centers inside the disk) covering ``fraction`` of them."""
    if not 0.0 <= fraction <= 1.0:
        raise ParameterError(f"forbidden fraction must lie in [0, 1], got {fraction}")
    if not cell_size > 0:
        raise ParameterError(f"cell_size must be > 0, got {cell_size}")
    if fraction == 0:
        return ForbiddenZones()
    cx, cy = region.center
    n_side = int(math.ceil(2 * region.radius / cell_size))
    edges = np.arange(n_side) * cell_size - region.radius
    xs, ys = np.meshgrid(edges + cx, edges + cy, indexing="ij")
    lows = np.column_stack([xs.ravel(), ys.ravel()])
    centers = lows + 0.5 * cell_size
    lows = lows[region.contains(centers)]
    n_pick = int(round(fraction * len(lows)))
    pick = rng.choice(len(lows), size=n_pick, replace=False)
    chosen = lows[np.sort(pick)]
    return ForbiddenZones(cells=np.hstack([chosen, chosen + cell_size]))


def sample_feasible_points(
    region: Region,
    zones: ForbiddenZones,
    n: int,
    rng: np.random.Generator,
    max_rounds: int = 200,
) -> np.ndarray:
    """Uniform points on the disk minus the forbidden zones (rejection sampling)."""
    if zones.empty:
        return sample_uniform_disk(region, n, rng)
    out = np.zeros((0, 2))
    for _ in range(max_rounds):
        if len(out) >= n:
            break
        batch = sample_uniform_disk(region, max(2 * (n - len(out)), 16), rng)
        out = np.vstack([out, batch[~zones.contains(batch)]])
    if len(out) < n:
        raise InfeasibleRegionError(
            "no feasible placement left outside the forbidden zones",
            detail={"requested": n, "found": int(len(out))},
        )
    return out[:n]
