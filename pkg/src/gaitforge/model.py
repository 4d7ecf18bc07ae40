"""Geometric and mass model of the 10-DOF biped.

Ground frame: x forward, y to the robot's left, z up.  Each leg is the chain
hip roll (J1), hip pitch (J2), knee pitch (J3), ankle pitch (J4), ankle roll
(J5).  Positive pitch swings the distal link toward +x; positive roll swings
it toward +y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

JOINT_IDS = ("RJ1", "RJ2", "RJ3", "RJ4", "RJ5", "LJ1", "LJ2", "LJ3", "LJ4", "LJ5")
ROLL_JOINTS = (0, 4)  # J1, J5 within a leg block
ANGLE_LIMIT = math.pi / 2
_ANGLE_TOL = 1e-12

DEFAULT_MASSES = {"pelvis": 0.30, "thigh": 0.12, "shin": 0.12, "foot": 0.06}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class BipedGeometry:
    hip_half_width: float = 0.035
    thigh_len: float = 0.085
    shin_len: float = 0.085
    ankle_height: float = 0.035
    sole_length: float = 0.10
    sole_width: float = 0.06
    # mass of one link of each type; thigh/shin/foot exist once per leg
    link_masses: dict = field(default_factory=lambda: dict(DEFAULT_MASSES))

    def __post_init__(self):
        for name in ("hip_half_width", "thigh_len", "shin_len", "ankle_height",
                     "sole_length", "sole_width"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ModelError(f"{name} must be a positive length, got {v!r}")
        unknown = set(self.link_masses) - set(DEFAULT_MASSES)
        if unknown:
            raise ModelError(f"unknown link(s) in link_masses: {sorted(unknown)}")
        masses = {**DEFAULT_MASSES, **self.link_masses}
        for k, v in masses.items():
            if not (math.isfinite(v) and v >= 0):
                raise ModelError(f"mass of {k} must be >= 0, got {v!r}")
        object.__setattr__(self, "link_masses", masses)
        if self.total_mass <= 0:
            raise ModelError("total mass must be > 0")

    @property
    def total_mass(self) -> float:
        m = self.link_masses
        return m["pelvis"] + 2 * (m["thigh"] + m["shin"] + m["foot"])

    def __hash__(self):
        return hash((self.hip_half_width, self.thigh_len, self.shin_len, self.ankle_height,
                     self.sole_length, self.sole_width, tuple(sorted(self.link_masses.items()))))


_GEOMETRY_KEYS = ("hip_half_width", "thigh_len", "shin_len", "ankle_height",
                  "sole_length", "sole_width", "link_masses")


def parse_geometry(text: str) -> BipedGeometry:
    """Parse a ``key=value`` geometry config.

    ``link_masses`` takes comma-separated ``link:kg`` pairs, e.g.
    ``link_masses = pelvis:0.3, thigh:0.12``; links left out keep defaults.
    """
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _GEOMETRY_KEYS:
            raise ModelError(f"line {lineno}: unknown key {key!r}")
        if key in kwargs:
            raise ModelError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "link_masses":
                masses = {}
                for item in value.split(","):
                    link, _, kg = item.partition(":")
                    masses[link.strip()] = float(kg)
                kwargs[key] = masses
            else:
                kwargs[key] = float(value)
        except ValueError:
            raise ModelError(f"line {lineno}: bad value {value!r} for {key}") from None
    return BipedGeometry(**kwargs)


def load_geometry(path) -> BipedGeometry:
    return parse_geometry(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class JointVector:
    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != 10:
            raise ModelError(f"expected 10 joint angles, got {len(angles)}")
        for jid, a in zip(JOINT_IDS, angles):
            if not math.isfinite(a):
                raise ModelError(f"{jid}: non-finite angle {a!r}")
            if abs(a) > ANGLE_LIMIT + _ANGLE_TOL:
                raise ModelError(f"{jid}: angle {a!r} rad outside [-pi/2, pi/2]")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def zeros(cls) -> JointVector:
        return cls((0.0,) * 10)

    @property
    def right(self):
        return self.angles[:5]

    @property
    def left(self):
        return self.angles[5:]

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.angles[JOINT_IDS.index(key)]
        return self.angles[key]


def mirror_joints(joints: JointVector) -> JointVector:
    """Swap the leg blocks and negate the roll joints (J1, J5)."""
    def flip(block):
        return [-a if i in ROLL_JOINTS else a for i, a in enumerate(block)]
    return JointVector(tuple(flip(joints.left) + flip(joints.right)))


@dataclass(frozen=True)
class LegPose:
    hip: np.ndarray
    knee: np.ndarray
    ankle: np.ndarray
    sole: np.ndarray  # (4, 3) corners, foot-frame order (+x+y, +x-y, -x-y, -x+y)

    @property
    def sole_center(self) -> np.ndarray:
        return self.sole.mean(axis=0)

    def points(self) -> np.ndarray:
        return np.vstack([self.hip, self.knee, self.ankle, self.sole])


@dataclass(frozen=True)
class BodyPose:
    pelvis: np.ndarray
    right: LegPose
    left: LegPose

    def leg(self, side: str) -> LegPose:
        return {"right": self.right, "left": self.left}[side]

    def points(self) -> np.ndarray:
        """All 15 pose points, pelvis first, then right leg, then left leg."""
        return np.vstack([self.pelvis, self.right.points(), self.left.points()])

    def reflected(self) -> BodyPose:
        """Mirror image in the x-z plane, with leg labels swapped."""
        flip = np.array([1.0, -1.0, 1.0])

        def leg(lp):
            # reflection swaps the +y/-y corners; restore the canonical order
            sole = (lp.sole * flip)[[1, 0, 3, 2]]
            return LegPose(lp.hip * flip, lp.knee * flip, lp.ankle * flip, sole)
        return BodyPose(self.pelvis * flip, leg(self.left), leg(self.right))


def _rot_roll(a):
    c, s = math.cos(a), math.sin(a)
    # rotation about +x: (0, 0, -1) -> (0, sin a, -cos a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_pitch(a):
    c, s = math.cos(a), math.sin(a)
    # rotation about -y: (0, 0, -1) -> (sin a, 0, -cos a)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _link_dir(roll, pitch):
    # third column of roll(r) @ pitch(p), negated: the unit vector down a link
    sp, cp = math.sin(pitch), math.cos(pitch)
    return np.array([sp, math.sin(roll) * cp, -math.cos(roll) * cp])


def _leg_chain(geom, hip, q, corners):
    # pitch axes are parallel, so the pitch angles simply add along the chain
    knee = hip + geom.thigh_len * _link_dir(q[0], q[1])
    ankle = knee + geom.shin_len * _link_dir(q[0], q[1] + q[2])
    rf = _rot_roll(q[0]) @ _rot_pitch(q[1] + q[2] + q[3]) @ _rot_roll(q[4])
    sole = ankle + corners @ rf.T
    return hip, knee, ankle, sole


def _sole_template(geom):
    hl, hw, h = geom.sole_length / 2, geom.sole_width / 2, geom.ankle_height
    return np.array([[hl, hw, -h], [hl, -hw, -h], [-hl, -hw, -h], [-hl, hw, -h]])


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def forward_kinematics(geom: BipedGeometry, joints: JointVector) -> BodyPose:
    """Pose of every chain point, grounded so the lowest sole corner is at z=0."""
    if not isinstance(joints, JointVector):
        joints = JointVector(tuple(joints))
    pelvis = np.zeros(3)
    corners = _sole_template(geom)
    legs = [_leg_chain(geom, np.array([0.0, side_y, 0.0]), q, corners)
            for side_y, q in ((-geom.hip_half_width, joints.right),
                              (geom.hip_half_width, joints.left))]
    lowest = min(leg[3][:, 2].min() for leg in legs)
    shift = np.array([0.0, 0.0, -lowest])
    pelvis = pelvis + shift
    right, left = (LegPose(*(_frozen(p + shift) for p in leg)) for leg in legs)
    return BodyPose(_frozen(pelvis), right, left)


@dataclass(frozen=True)
class ComPoint:
    xyz: np.ndarray
    total_mass: float


def link_midpoints(pose: BodyPose):
    """(link name, midpoint) for the 7 links, each left/right pair adjacent."""
    r, l = pose.right, pose.left
    out = [("pelvis", (r.hip + l.hip) / 2)]
    for name, (ra, rb), (la, lb) in (
        ("thigh", (r.hip, r.knee), (l.hip, l.knee)),
        ("shin", (r.knee, r.ankle), (l.knee, l.ankle)),
        ("foot", (r.ankle, r.sole_center), (l.ankle, l.sole_center)),
    ):
        out.append((name, (ra + rb) / 2))
        out.append((name, (la + lb) / 2))
    return out


def center_of_mass(geom: BipedGeometry, pose: BodyPose) -> ComPoint:
    total = geom.total_mass
    if total <= 0:
        raise ModelError("zero total mass")
    mids = link_midpoints(pose)
    # fsum keeps mirrored contributions cancelling exactly
    xyz = [math.fsum(geom.link_masses[name] * float(p[i]) for name, p in mids) / total
           for i in range(3)]
    return ComPoint(_frozen(xyz), total)
