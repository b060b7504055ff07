"""Open subsets of R^d with the geometric oracles the samplers need.

Every domain is an immutable value object exposing

* ``contains(x)``  -- open-set membership, vectorized over points,
* ``dist_lb(x)``   -- a computable lower bound 0 < delta(x) <= d(x, D^c),
* ``boundary_anchors`` -- a finite list of boundary points,
* ``truncate(xi, r)``  -- the intersection D & B(xi, r).

Membership is resolved conservatively for openness: any point within
1e-12 of a descriptor surface is classified as *outside*.  Distance
bounds are exact for the primitive shapes and conservative (a min over
components) for composites -- the samplers only ever need a positive
lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

SURFACE_TOL = 1e-12


def _as_points(x, dim):
    """Return (pts of shape (n, dim), scalar_input flag)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise DomainError(f"point has dimension {a.shape[0]}, domain has {dim}")
        return a[None, :], True
    if a.ndim == 2 and a.shape[1] == dim:
        return a, False
    raise DomainError(f"expected points of shape (n, {dim}) or ({dim},)")


def _segment_distance(pts, a, b):
    """Distances from pts (n,2+) to the closed segment [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


class Domain:
    """Base class: open subset of R^d."""

    dim: int
    boundary_anchors: list

    # subclasses implement the raw signed clearance: distance to the
    # complement for inside points (may be negative/zero outside)
    def _clearance(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x):
        pts, scalar = _as_points(x, self.dim)
        inside = self._clearance(pts) > SURFACE_TOL
        return bool(inside[0]) if scalar else inside

    def dist_lb(self, x):
        pts, scalar = _as_points(x, self.dim)
        c = self._clearance(pts)
        if np.any(c <= SURFACE_TOL):
            k = int(np.argmax(c <= SURFACE_TOL))
            raise DomainError(f"dist_lb called at a point outside the domain: "
                              f"{pts[k].tolist()}")
        return float(c[0]) if scalar else c

    def truncate(self, xi, r: float) -> "Domain":
        """D intersected with the open ball B(xi, r)."""
        xi = np.asarray(xi, dtype=float)
        if not r > 0:
            raise DomainError("truncate needs r > 0")
        trunc = Intersection([self, Ball(xi, r)])
        trunc.boundary_anchors = [xi.copy()]
        return trunc


# ===================================================================== #
# primitive shapes
# ===================================================================== #

@dataclass(frozen=True)
class Ball(Domain):
    """Open ball B(center, radius)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center",
                           np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ConfigError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def boundary_anchors(self):
        anchors = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = self.radius
            anchors.append(self.center + e)
        return anchors

    def _clearance(self, pts):
        return self.radius - np.linalg.norm(pts - self.center, axis=1)


@dataclass(frozen=True)
class HalfSpace(Domain):
    """Open half-space {x : normal . x > offset} (normal is normalized)."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=float))
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ConfigError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    @property
    def dim(self):
        return self.normal.shape[0]

    @property
    def boundary_anchors(self):
        return [self.offset * self.normal]

    def _clearance(self, pts):
        return pts @ self.normal - self.offset


@dataclass(frozen=True)
class SlitPlane(Domain):
    """R^2 minus the closed ray {(t, 0) : t >= 0}."""

    dim: int = 2

    def __post_init__(self):
        if self.dim != 2:
            raise ConfigError("the slit plane is two-dimensional")

    @property
    def boundary_anchors(self):
        return [np.array([0.0, 0.0]), np.array([0.25, 0.0]),
                np.array([1.0, 0.0])]

    def _clearance(self, pts):
        # distance to the slit: |x2| when x1 >= 0, else distance to the tip
        return np.where(pts[:, 0] >= 0.0,
                        np.abs(pts[:, 1]),
                        np.linalg.norm(pts, axis=1))


@dataclass(frozen=True)
class Cone(Domain):
    """Open circular cone {x : angle(x - vertex, axis) < half_angle}."""

    vertex: np.ndarray
    axis: np.ndarray
    half_angle: float

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.vertex, dtype=float))
        a = np.atleast_1d(np.asarray(self.axis, dtype=float))
        if v.shape != a.shape:
            raise ConfigError("cone vertex and axis must share a dimension")
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ConfigError("cone axis must be nonzero")
        if not 0 < self.half_angle < np.pi:
            raise ConfigError("cone half-angle must lie in (0, pi)")
        object.__setattr__(self, "vertex", v)
        object.__setattr__(self, "axis", a / norm)

    @property
    def dim(self):
        return self.vertex.shape[0]

    @property
    def boundary_anchors(self):
        anchors = [self.vertex.copy()]
        perp = np.zeros(self.dim)
        k = int(np.argmin(np.abs(self.axis)))
        perp[k] = 1.0
        perp = perp - (perp @ self.axis) * self.axis
        perp /= np.linalg.norm(perp)
        anchors.append(self.vertex + np.cos(self.half_angle) * self.axis
                       + np.sin(self.half_angle) * perp)
        return anchors

    def _clearance(self, pts):
        rel = pts - self.vertex
        s = np.linalg.norm(rel, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_psi = np.where(s > 0, rel @ self.axis / np.where(s > 0, s, 1.0),
                               1.0)
        psi = np.arccos(np.clip(cos_psi, -1.0, 1.0))
        gap = self.half_angle - psi
        # nearest boundary point is the lateral surface unless the angular
        # gap exceeds a right angle, in which case it is the vertex
        d = np.where(gap >= np.pi / 2.0, s, s * np.sin(np.maximum(gap, -1.0)))
        return np.where(s == 0.0, 0.0, d)


@dataclass(frozen=True)
class SegmentComplement(Domain):
    """R^2 minus a finite union of closed segments."""

    segments: tuple   # of (a, b) pairs, each a 2-vector
    dim: int = 2

    def __post_init__(self):
        segs = tuple((np.asarray(a, dtype=float), np.asarray(b, dtype=float))
                     for a, b in self.segments)
        if not segs:
            raise ConfigError("need at least one segment")
        for a, b in segs:
            if a.shape != (2,) or b.shape != (2,):
                raise ConfigError("segments must join 2-d points")
        object.__setattr__(self, "segments", segs)

    @property
    def boundary_anchors(self):
        anchors = []
        for a, b in self.segments:
            anchors.extend([a.copy(), 0.5 * (a + b), b.copy()])
        return anchors

    def _clearance(self, pts):
        d = np.full(pts.shape[0], np.inf)
        for a, b in self.segments:
            d = np.minimum(d, _segment_distance(pts, a, b))
        return d


def box_minus_comb(teeth: int = 4, gap: float = 0.25) -> Domain:
    """The open unit square minus a comb of vertical teeth.

    Teeth hang from the bottom edge at x = k/(teeth+1) and reach up to
    height 1 - gap, leaving a corridor of width `gap` along the top.
    A stress-test geometry: the boundary is highly non-smooth, yet every
    boundary point still admits the boundary Harnack machinery.
    """
    if teeth < 1:
        raise ConfigError("comb needs at least one tooth")
    if not 0 < gap < 1:
        raise ConfigError("comb gap must lie in (0, 1)")
    box = Intersection([
        HalfSpace(np.array([1.0, 0.0]), 0.0),
        HalfSpace(np.array([-1.0, 0.0]), -1.0),
        HalfSpace(np.array([0.0, 1.0]), 0.0),
        HalfSpace(np.array([0.0, -1.0]), -1.0),
    ])
    segs = []
    for k in range(1, teeth + 1):
        xk = k / (teeth + 1)
        segs.append((np.array([xk, 0.0]), np.array([xk, 1.0 - gap])))
    comb = Intersection([box, SegmentComplement(tuple(segs))])
    comb.boundary_anchors = (
        [np.array([0.0, 0.5]), np.array([0.5, 0.0])]
        + [np.array([k / (teeth + 1), 1.0 - gap]) for k in range(1, teeth + 1)])
    return comb


# ===================================================================== #
# composites
# ===================================================================== #

class Intersection(Domain):
    """Intersection of domains; clearance is the min over components.

    The min is the exact distance to the complement of the intersection,
    so dist_lb stays tight here.
    """

    def __init__(self, domains):
        domains = list(domains)
        if not domains:
            raise ConfigError("intersection of nothing")
        dims = {d.dim for d in domains}
        if len(dims) != 1:
            raise ConfigError("all components must share a dimension")
        self.components = domains
        self.dim = domains[0].dim
        # an anchor of one component lies on the intersection's boundary
        # iff every other component strictly contains it
        self.boundary_anchors = [a for d in domains for a in d.boundary_anchors
                                 if all(o is d or o.contains(a)
                                        for o in domains)]

    def _clearance(self, pts):
        c = self.components[0]._clearance(pts)
        for d in self.components[1:]:
            c = np.minimum(c, d._clearance(pts))
        return c


class Union(Domain):
    """Union of domains; clearance is the max over components.

    The max of the component clearances is a valid (possibly
    conservative) lower bound on the distance to the union's complement.
    """

    def __init__(self, domains):
        domains = list(domains)
        if not domains:
            raise ConfigError("union of nothing")
        dims = {d.dim for d in domains}
        if len(dims) != 1:
            raise ConfigError("all components must share a dimension")
        self.components = domains
        self.dim = domains[0].dim
        self.boundary_anchors = [a for d in domains for a in d.boundary_anchors
                                 if all(not o.contains(a) for o in domains)]

    def _clearance(self, pts):
        c = self.components[0]._clearance(pts)
        for d in self.components[1:]:
            c = np.maximum(c, d._clearance(pts))
        return c


# ===================================================================== #
# catalog
# ===================================================================== #

def from_descriptor(desc: dict) -> Domain:
    """Build a domain from a JSON-style descriptor {"type": ..., params}."""
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError("domain descriptor must be a dict with a 'type' key")
    t = desc["type"].lower().replace("_", "-")
    try:
        if t == "ball":
            return Ball(np.asarray(desc.get("center", [0.0])), desc.get("radius", 1.0))
        if t in ("halfspace", "half-space"):
            return HalfSpace(np.asarray(desc["normal"]), desc.get("offset", 0.0))
        if t in ("slitplane", "slit-plane"):
            return SlitPlane()
        if t == "cone":
            return Cone(np.asarray(desc["vertex"]), np.asarray(desc["axis"]),
                        desc["half_angle"])
        if t in ("boxminuscomb", "box-minus-comb", "comb"):
            return box_minus_comb(desc.get("teeth", 4), desc.get("gap", 0.25))
        if t in ("segmentcomplement", "segment-complement"):
            return SegmentComplement(tuple((s[0], s[1]) for s in desc["segments"]))
        if t == "intersection":
            return Intersection([from_descriptor(d) for d in desc["components"]])
        if t == "union":
            return Union([from_descriptor(d) for d in desc["components"]])
    except KeyError as exc:
        raise ConfigError(f"domain descriptor missing field {exc}") from exc
    raise ConfigError(f"unknown domain type {desc['type']!r}")
