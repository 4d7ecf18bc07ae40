"""Static stability (projected COM inside the support polygon) and the
inverted-pendulum torque / ZMP relations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BipedGeometry, BodyPose, center_of_mass

GRAVITY = 9.81
HULL_TOL = 1e-12
CONTAINS_TOL = 1e-12


class StabilityError(ValueError):
    pass


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points, tol=HULL_TOL):
    """Counterclockwise hull (Andrew's monotone chain), collinear points dropped.

    Starts at the lexicographically smallest (x, y) point.
    """
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) <= 2:
        return pts

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= tol:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class SupportPolygon:
    vertices: tuple  # ((x, y), ...) counterclockwise

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        n = len(verts)
        if n < 3:
            raise StabilityError(f"support polygon needs >= 3 vertices, got {n}")
        for i in range(n):
            if _cross(verts[i], verts[(i + 1) % n], verts[(i + 2) % n]) <= HULL_TOL:
                raise StabilityError("support polygon must be strictly convex and counterclockwise")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def hull_of(cls, points) -> SupportPolygon:
        return cls(tuple(convex_hull(points)))

    def edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def centroid(self):
        return tuple(np.mean(self.vertices, axis=0))


def support_polygon(pose: BodyPose, contacts) -> SupportPolygon:
    """Hull of the ground projections of the soles of the feet in contact.

    ``contacts`` is ``(right_in_contact, left_in_contact)``.
    """
    right, left = contacts
    corners = []
    if right:
        corners.extend(pose.right.sole[:, :2].tolist())
    if left:
        corners.extend(pose.left.sole[:, :2].tolist())
    if not corners:
        raise StabilityError("no support")
    return SupportPolygon.hull_of(corners)


def contains(poly: SupportPolygon, p) -> bool:
    """Closed-set point test: boundary points count as inside."""
    return all(_cross(a, b, p) >= -CONTAINS_TOL for a, b in poly.edges())


def _segment_distance(p, a, b):
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    px, py = p[0] - ax, p[1] - ay
    t = max(0.0, min(1.0, (px * dx + py * dy) / (dx * dx + dy * dy)))
    return math.hypot(px - t * dx, py - t * dy)


def static_margin(poly: SupportPolygon, p) -> float:
    """Signed distance to the polygon boundary, positive inside."""
    d = min(_segment_distance(p, a, b) for a, b in poly.edges())
    return d if contains(poly, p) else -d


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise StabilityError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class PendulumState:
    m: float
    l: float
    g: float = GRAVITY
    theta: float = 0.0
    theta_ddot: float = 0.0
    y_mc: float = 0.0
    y_mc_ddot: float = 0.0

    def __post_init__(self):
        _check_finite(m=self.m, l=self.l, g=self.g, theta=self.theta,
                      theta_ddot=self.theta_ddot, y_mc=self.y_mc, y_mc_ddot=self.y_mc_ddot)
        if self.m <= 0 or self.l <= 0 or self.g <= 0:
            raise StabilityError("m, l and g must be > 0")

    @classmethod
    def from_com(cls, m, l, y_mc, y_mc_ddot, g=GRAVITY) -> PendulumState:
        """Small-angle state with l*theta = y_mc and l*theta_ddot = y_mc_ddot."""
        return cls(m, l, g, theta=y_mc / l, theta_ddot=y_mc_ddot / l,
                   y_mc=y_mc, y_mc_ddot=y_mc_ddot)

    @property
    def normal_force(self) -> float:
        return self.m * self.g


def pendulum_torque(s: PendulumState) -> float:
    """T = m g l theta - m l^2 theta_ddot."""
    return s.m * s.g * s.l * s.theta - s.m * s.l ** 2 * s.theta_ddot


def zmp_from_torque(s: PendulumState) -> float:
    """T / F_z with F_z = m g; equals ``zmp`` for states built by ``from_com``."""
    return pendulum_torque(s) / s.normal_force


def zmp(y_mc: float, y_mc_ddot: float, l: float, g: float = GRAVITY) -> float:
    """Y_zmp = y_mc - (l / g) * y_mc_ddot.  Axis-agnostic: pass x values for the
    sagittal analogue."""
    _check_finite(y_mc=y_mc, y_mc_ddot=y_mc_ddot, l=l, g=g)
    if l <= 0 or g <= 0:
        raise StabilityError("l and g must be > 0")
    return y_mc - (l / g) * y_mc_ddot


@dataclass(frozen=True)
class StabilitySample:
    t_ms: float
    com: tuple  # (x, y, z)
    polygon: SupportPolygon
    margin_m: float
    y_mc_ddot: float
    y_zmp: float

    @property
    def com_xy(self):
        return self.com[:2]

    @property
    def stable(self) -> bool:
        return self.margin_m >= 0


def second_difference(values, dt):
    """Second derivative per sample: central differences inside, three-point
    one-sided differences at the ends.  Exact for quadratics."""
    y = list(values)
    n = len(y)
    if n < 3:
        raise StabilityError("need at least 3 samples")
    dt2 = dt * dt
    out = [(y[i - 1] - 2 * y[i] + y[i + 1]) / dt2 for i in range(1, n - 1)]
    return [(y[0] - 2 * y[1] + y[2]) / dt2] + out + [(y[-3] - 2 * y[-2] + y[-1]) / dt2]


def analyze_trajectory(samples, geom: BipedGeometry, g: float = GRAVITY):
    """One StabilitySample per ``(t_ms, pose, contacts)`` frame.

    Frames must be uniformly spaced.  The lateral COM acceleration comes from
    finite differences; the pendulum length is the COM height.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise StabilityError(f"need at least 3 samples, got {len(samples)}")
    times = [float(s[0]) for s in samples]
    dt_ms = times[1] - times[0]
    if dt_ms <= 0:
        raise StabilityError("timestamps must be strictly increasing")
    for a, b in zip(times, times[1:]):
        if abs((b - a) - dt_ms) > 1e-9 * max(1.0, abs(dt_ms)):
            raise StabilityError(f"non-uniform timestamps at t={b}")

    coms = [tuple(float(c) for c in center_of_mass(geom, pose).xyz) for _, pose, _ in samples]
    yddot = second_difference([c[1] for c in coms], dt_ms / 1000.0)

    out = []
    for (t, pose, contacts), com, ydd in zip(samples, coms, yddot):
        poly = support_polygon(pose, contacts)
        margin = static_margin(poly, com[:2])
        out.append(StabilitySample(t, com, poly, margin, ydd, zmp(com[1], ydd, com[2], g)))
    return out
