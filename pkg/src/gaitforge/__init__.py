"""Simulation and analysis toolkit for a 10-DOF servo biped walking a
five-stage PWM gait."""

from .model import (JOINT_IDS, BipedGeometry, BodyPose, ComPoint, JointVector,
                    center_of_mass, forward_kinematics, mirror_joints)
from .servo import PwmFrame, ServoConfig, default_configs, pulse_to_angle, angle_to_pulse
from .gait import GaitTable, Stage, Support, builtin_forward_table, generate_cycle
from .stability import SupportPolygon, analyze_trajectory, pendulum_torque, zmp

__all__ = [
    "JOINT_IDS", "BipedGeometry", "BodyPose", "ComPoint", "JointVector", "center_of_mass",
    "forward_kinematics", "mirror_joints", "PwmFrame", "ServoConfig", "default_configs",
    "pulse_to_angle", "angle_to_pulse", "GaitTable", "Stage", "Support",
    "builtin_forward_table", "generate_cycle", "SupportPolygon", "analyze_trajectory",
    "pendulum_torque", "zmp",
]
