"""Spatial constraint regions over image grids and coordinate tables.

Image pixels use x = column, y = row with the origin at the top-left, so
state index ``i`` of an (height, width) grid sits at ``(i % width,
i // width)``. All built-in shapes are closed: boundary points are inside.
A region's ``loc`` flips the test — ``"in"`` keeps the interior,
``"out"`` its complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidPoint
from .expressions import Comparison, parse_comparison, variables_used

LOC_IN = "in"
LOC_OUT = "out"

_EDGE_TOL = 1e-12


# --- geometry over which constraints are evaluated ---------------------------

@dataclass(frozen=True)
class ImageGrid:
    """Pixel grid with row-major state indexing."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidInput("image grid needs height >= 1 and width >= 1")

    @property
    def n_states(self) -> int:
        return self.height * self.width

    def coords(self) -> np.ndarray:
        """(n, 2) array of (x, y) = (col, row) per state index."""
        idx = np.arange(self.n_states)
        return np.column_stack((idx % self.width, idx // self.width)).astype(float)


@dataclass(frozen=True)
class PointCloud:
    """Explicit coordinates, one (x, y[, z]) row per state."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise InvalidInput("point cloud needs shape (n, 2) or (n, 3)")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n_states(self) -> int:
        return self.points.shape[0]

    def coords(self) -> np.ndarray:
        return self.points


# --- regions ------------------------------------------------------------------

def _check_loc(loc: str):
    if loc not in (LOC_IN, LOC_OUT):
        raise InvalidInput(f"loc must be 'in' or 'out', got {loc!r}")


class Region:
    """Base class: shapes implement ``_inside`` on a validated point tuple."""

    dimension = 2

    def contains(self, point) -> bool:
        pt = tuple(float(c) for c in np.atleast_1d(point))
        if len(pt) != self.dimension:
            raise InvalidPoint(
                f"{type(self).__name__} expects {self.dimension}-D points, got {len(pt)}-D"
            )
        inside = self._inside(pt)
        return inside if self.loc == LOC_IN else not inside


@dataclass(frozen=True)
class Circle(Region):
    center_x: float
    center_y: float
    radius: float
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)
        if self.radius <= 0:
            raise InvalidInput("circle radius must be > 0")

    def _inside(self, pt) -> bool:
        dx = pt[0] - self.center_x
        dy = pt[1] - self.center_y
        return dx * dx + dy * dy <= self.radius * self.radius


@dataclass(frozen=True)
class Ellipse(Region):
    center_x: float
    center_y: float
    a: float                  # semi-axis along the rotated x direction
    b: float                  # semi-axis along the rotated y direction
    angle: float = 0.0        # rotation of the a-axis from +x, radians
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)
        if self.a <= 0 or self.b <= 0:
            raise InvalidInput("ellipse semi-axes must be > 0")

    def _inside(self, pt) -> bool:
        dx = pt[0] - self.center_x
        dy = pt[1] - self.center_y
        c, s = np.cos(self.angle), np.sin(self.angle)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / self.a) ** 2 + (v / self.b) ** 2 <= 1.0


def _on_segment(pt, a, b) -> bool:
    """Point lies on the closed segment a-b (within a tiny tolerance)."""
    (px, py), (ax, ay), (bx, by) = pt, a, b
    cross = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
    scale = max(abs(bx - ax), abs(by - ay), 1.0)
    if abs(cross) > _EDGE_TOL * scale * max(abs(px - ax), abs(py - ay), 1.0):
        return False
    return (
        min(ax, bx) - _EDGE_TOL <= px <= max(ax, bx) + _EDGE_TOL
        and min(ay, by) - _EDGE_TOL <= py <= max(ay, by) + _EDGE_TOL
    )


def _on_polygon_boundary(vertices, pt) -> bool:
    m = len(vertices)
    return any(_on_segment(pt, vertices[k], vertices[(k + 1) % m]) for k in range(m))


def point_in_polygon_winding(vertices, pt) -> bool:
    """Winding-number membership test; boundary points count as inside."""
    if _on_polygon_boundary(vertices, pt):
        return True
    px, py = pt
    winding = 0
    m = len(vertices)
    for k in range(m):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % m]
        is_left = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        if ay <= py:
            if by > py and is_left > 0:
                winding += 1
        elif by <= py and is_left < 0:
            winding -= 1
    return winding != 0


def point_in_polygon_raycast(vertices, pt) -> bool:
    """Crossing-parity membership test; boundary points count as inside."""
    if _on_polygon_boundary(vertices, pt):
        return True
    px, py = pt
    inside = False
    m = len(vertices)
    for k in range(m):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % m]
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def _segments_properly_intersect(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


@dataclass(frozen=True)
class Polygon(Region):
    vertices: tuple
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise InvalidInput("polygon needs at least 3 vertices")
        m = len(verts)
        for i in range(m):
            for j in range(i + 1, m):
                if j in (i, (i + 1) % m, (i - 1) % m) or (i == 0 and j == m - 1):
                    continue
                if _segments_properly_intersect(
                    verts[i], verts[(i + 1) % m], verts[j], verts[(j + 1) % m]
                ):
                    raise InvalidInput("polygon is self-intersecting")
        object.__setattr__(self, "vertices", verts)

    def _inside(self, pt) -> bool:
        return point_in_polygon_winding(self.vertices, pt)


@dataclass(frozen=True)
class Line(Region):
    """Closed half-plane bounded by the line through p1 and p2.

    ``side="left"`` keeps points to the left of the p1->p2 direction,
    ``side="right"`` the other half; the line itself belongs to both.
    """

    p1: tuple
    p2: tuple
    side: str = "left"
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)
        if self.side not in ("left", "right"):
            raise InvalidInput("line side must be 'left' or 'right'")
        p1 = (float(self.p1[0]), float(self.p1[1]))
        p2 = (float(self.p2[0]), float(self.p2[1]))
        if p1 == p2:
            raise InvalidInput("line endpoints must differ")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    def _inside(self, pt) -> bool:
        (ax, ay), (bx, by) = self.p1, self.p2
        cross = (bx - ax) * (pt[1] - ay) - (pt[0] - ax) * (by - ay)
        return cross >= 0 if self.side == "left" else cross <= 0


@dataclass(frozen=True)
class Parabola(Region):
    """Region bounded by an axis-aligned parabola.

    ``orientation`` is the direction the parabola opens; ``side="concave"``
    keeps the region containing the focus, ``side="convex"`` the other one.
    """

    vertex: tuple
    focal: float
    orientation: str = "up"
    side: str = "concave"
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)
        if self.focal <= 0:
            raise InvalidInput("parabola focal distance must be > 0")
        if self.orientation not in ("up", "down", "left", "right"):
            raise InvalidInput("parabola orientation must be up/down/left/right")
        if self.side not in ("concave", "convex"):
            raise InvalidInput("parabola side must be 'concave' or 'convex'")
        object.__setattr__(self, "vertex", (float(self.vertex[0]), float(self.vertex[1])))

    def _inside(self, pt) -> bool:
        vx, vy = self.vertex
        x, y = pt
        if self.orientation == "up":
            gap = y - (vy + (x - vx) ** 2 / (4 * self.focal))
        elif self.orientation == "down":
            gap = (vy - (x - vx) ** 2 / (4 * self.focal)) - y
        elif self.orientation == "right":
            gap = x - (vx + (y - vy) ** 2 / (4 * self.focal))
        else:
            gap = (vx - (y - vy) ** 2 / (4 * self.focal)) - x
        return gap >= 0 if self.side == "concave" else gap <= 0


@dataclass(frozen=True)
class Cylinder(Region):
    """Closed cylinder with axis parallel to z."""

    center_x: float
    center_y: float
    radius: float
    z_min: float
    z_max: float
    loc: str = LOC_IN

    dimension = 3

    def __post_init__(self):
        _check_loc(self.loc)
        if self.radius <= 0:
            raise InvalidInput("cylinder radius must be > 0")
        if self.z_max < self.z_min:
            raise InvalidInput("cylinder z range is empty")

    def _inside(self, pt) -> bool:
        dx = pt[0] - self.center_x
        dy = pt[1] - self.center_y
        return (
            dx * dx + dy * dy <= self.radius * self.radius
            and self.z_min <= pt[2] <= self.z_max
        )


@dataclass(frozen=True)
class ExpressionRegion(Region):
    """Region defined by a user-written inequality over x, y (and z)."""

    comparison: Comparison
    loc: str = LOC_IN

    def __post_init__(self):
        _check_loc(self.loc)

    @property
    def dimension(self) -> int:
        return 3 if "z" in variables_used(self.comparison) else 2

    @property
    def text(self) -> str:
        return self.comparison.text()

    def _inside(self, pt) -> bool:
        env = {"x": pt[0], "y": pt[1]}
        if len(pt) == 3:
            env["z"] = pt[2]
        return self.comparison.evaluate(env)


def parse_constraint_expression(text: str, loc: str = LOC_IN) -> ExpressionRegion:
    """Parse an inequality string into an evaluable region."""
    return ExpressionRegion(parse_comparison(text), loc=loc)


def get_constraint_indices(region: Region, geometry) -> np.ndarray:
    """State indices whose coordinates satisfy the region test."""
    coords = geometry.coords()
    return np.array(
        [i for i, pt in enumerate(coords) if region.contains(pt)], dtype=int
    )


# --- constraint specification for the selection algorithms --------------------

MAX_N = "max_n"
EXACT_N = "exact_n"
PREDETERMINED = "predetermined"
DISTANCE = "distance"

CONSTRAINT_MODES = (MAX_N, EXACT_N, PREDETERMINED, DISTANCE)


@dataclass(frozen=True)
class ConstraintSpec:
    """What the constrained selector must enforce.

    ``idx_constrained`` is the region's index set for the count modes;
    ``s`` is the in-region sensor budget (max_n, exact_n) or the number of
    predetermined sensors; ``d`` the minimum pairwise separation, measured
    in ``geometry`` coordinates.
    """

    idx_constrained: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    mode: str = MAX_N
    s: int | None = None
    d: float | None = None
    geometry: ImageGrid | PointCloud | None = None

    def __post_init__(self):
        if self.mode not in CONSTRAINT_MODES:
            raise InvalidInput(f"unknown constraint mode {self.mode!r}")
        idx = np.unique(np.asarray(self.idx_constrained, dtype=int))
        object.__setattr__(self, "idx_constrained", idx)
        if self.mode in (MAX_N, EXACT_N):
            if self.s is None or self.s < 0:
                raise InvalidInput(f"{self.mode} needs a sensor budget s >= 0")
        if self.mode == DISTANCE:
            if self.d is None or self.d < 0:
                raise InvalidInput("distance mode needs d >= 0")
            if self.geometry is None:
                raise InvalidInput("distance mode needs grid geometry")
