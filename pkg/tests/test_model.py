import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaitforge.model import (
    JOINT_IDS,
    BipedGeometry,
    JointVector,
    ModelError,
    center_of_mass,
    forward_kinematics,
    link_midpoints,
    mirror_joints,
    parse_geometry,
)

angles = st.floats(-math.pi / 2, math.pi / 2, allow_nan=False)
joint_vectors = st.lists(angles, min_size=10, max_size=10).map(lambda a: JointVector(tuple(a)))


def pose_close(a, b, tol=1e-9):
    return np.allclose(a.points(), b.points(), rtol=0, atol=tol)


def test_erect_pose():
    g = BipedGeometry()
    pose = forward_kinematics(g, JointVector.zeros())
    assert pose.pelvis[2] == pytest.approx(g.thigh_len + g.shin_len + g.ankle_height, abs=1e-15)
    assert pose.right.hip[1] == -g.hip_half_width
    assert pose.left.hip[1] == g.hip_half_width
    for leg in (pose.right, pose.left):
        assert np.all(leg.sole[:, 2] == 0.0)


def test_knee_bend_two_link_oracle():
    # hand trig: straight ankle = hip - (0, 0, 0.2); bent knee swings shin
    # by 90 deg so ankle = hip + (0.1, 0, -0.1) -> +0.1 in x, +0.1 in z
    g = BipedGeometry(thigh_len=0.10, shin_len=0.10)
    straight = forward_kinematics(g, JointVector.zeros())
    q = [0.0] * 10
    q[JOINT_IDS.index("RJ3")] = math.pi / 2
    bent = forward_kinematics(g, JointVector(tuple(q)))
    d = bent.right.ankle - straight.right.ankle
    np.testing.assert_allclose(d, [0.10, 0.0, 0.10], atol=1e-12)
    # the left leg is untouched and still grounds the pose
    np.testing.assert_allclose(bent.left.sole, straight.left.sole, atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(joint_vectors)
def test_chain_lengths(j):
    g = BipedGeometry()
    pose = forward_kinematics(g, j)
    for leg in (pose.right, pose.left):
        assert np.linalg.norm(leg.knee - leg.hip) == pytest.approx(g.thigh_len, abs=1e-9)
        assert np.linalg.norm(leg.ankle - leg.knee) == pytest.approx(g.shin_len, abs=1e-9)
        assert np.linalg.norm(leg.sole_center - leg.ankle) == pytest.approx(g.ankle_height, abs=1e-9)
        assert np.linalg.norm(leg.hip - pose.pelvis) == pytest.approx(g.hip_half_width, abs=1e-9)
    soles = np.vstack([pose.right.sole, pose.left.sole])
    assert soles[:, 2].min() == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(joint_vectors)
def test_mirror_symmetry(j):
    g = BipedGeometry()
    assert pose_close(forward_kinematics(g, mirror_joints(j)), forward_kinematics(g, j).reflected())


@settings(max_examples=100, deadline=None)
@given(joint_vectors)
def test_mirror_involution(j):
    assert mirror_joints(mirror_joints(j)) == j


def test_mirror_examples():
    assert mirror_joints(JointVector.zeros()) == JointVector.zeros()
    q = [0.0] * 10
    q[0] = 0.1
    out = mirror_joints(JointVector(tuple(q)))
    assert out["LJ1"] == -0.1
    assert sum(abs(a) for a in out.angles) == pytest.approx(0.1)


@settings(max_examples=200, deadline=None)
@given(joint_vectors, st.integers(0, 9), st.floats(-1e-6, 1e-6))
def test_continuity(j, idx, eps):
    g = BipedGeometry()
    q = list(j.angles)
    q[idx] = max(-math.pi / 2, min(math.pi / 2, q[idx] + eps))
    moved = abs(q[idx] - j.angles[idx])
    total = (g.hip_half_width + g.thigh_len + g.shin_len + g.ankle_height
             + g.sole_length + g.sole_width)
    a = forward_kinematics(g, j).points()
    b = forward_kinematics(g, JointVector(tuple(q))).points()
    assert np.abs(b - a).max() <= total * moved * 2 + 1e-15


def test_com_erect_symmetric():
    g = BipedGeometry()
    com = center_of_mass(g, forward_kinematics(g, JointVector.zeros()))
    assert com.xyz[1] == 0.0
    assert com.total_mass == pytest.approx(0.30 + 2 * (0.12 + 0.12 + 0.06))


def test_com_all_mass_in_pelvis():
    g = BipedGeometry(link_masses={"pelvis": 2.0, "thigh": 0.0, "shin": 0.0, "foot": 0.0})
    pose = forward_kinematics(g, JointVector((0.2, -0.3, 0.5, 0.1, -0.2, 0.3, 0.1, -0.4, 0.2, 0.1)))
    np.testing.assert_allclose(center_of_mass(g, pose).xyz, pose.pelvis, atol=1e-15)


def test_com_hand_computed_midpoints():
    # unit masses, right knee at 90 deg; midpoints worked out by hand before
    # grounding: x sum 0.05 + 0.115, z sum -0.665, lift 0.23
    g = BipedGeometry(hip_half_width=0.04, thigh_len=0.1, shin_len=0.1, ankle_height=0.03,
                      link_masses={"pelvis": 1.0, "thigh": 1.0, "shin": 1.0, "foot": 1.0})
    q = [0.0] * 10
    q[2] = math.pi / 2
    com = center_of_mass(g, forward_kinematics(g, JointVector(tuple(q))))
    np.testing.assert_allclose(com.xyz, [0.165 / 7, 0.0, -0.665 / 7 + 0.23], atol=1e-12)
    assert com.total_mass == 7.0


@settings(max_examples=200, deadline=None)
@given(joint_vectors)
def test_com_inside_midpoint_box(j):
    g = BipedGeometry()
    pose = forward_kinematics(g, j)
    mids = np.array([p for _, p in link_midpoints(pose)])
    com = center_of_mass(g, pose).xyz
    assert np.all(com >= mids.min(axis=0) - 1e-12)
    assert np.all(com <= mids.max(axis=0) + 1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf, 2.0, -1.6])
def test_joint_vector_rejects(bad):
    with pytest.raises(ModelError):
        JointVector((bad,) + (0.0,) * 9)


def test_joint_vector_arity():
    with pytest.raises(ModelError):
        JointVector((0.0,) * 9)


@pytest.mark.parametrize("kwargs", [{"thigh_len": 0.0}, {"sole_width": -1.0},
                                    {"link_masses": {"thigh": -0.1}},
                                    {"link_masses": {"pelvis": 0, "thigh": 0, "shin": 0, "foot": 0}},
                                    {"link_masses": {"arm": 1.0}}])
def test_geometry_invalid(kwargs):
    with pytest.raises(ModelError):
        BipedGeometry(**kwargs)


def test_parse_geometry():
    g = parse_geometry("# hobby biped\nthigh_len = 0.09\nlink_masses = pelvis:0.5, foot:0.1\n")
    assert g.thigh_len == 0.09
    assert g.shin_len == 0.085
    assert g.link_masses == {"pelvis": 0.5, "thigh": 0.12, "shin": 0.12, "foot": 0.1}


@pytest.mark.parametrize("text", ["knee_len=0.1", "thigh_len", "thigh_len=abc",
                                  "thigh_len=0.1\nthigh_len=0.2"])
def test_parse_geometry_errors(text):
    with pytest.raises(ModelError):
        parse_geometry(text)
