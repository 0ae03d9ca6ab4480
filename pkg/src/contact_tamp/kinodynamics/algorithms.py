"""Kinematics and dynamics of floating-base trees.

Velocity convention: v = [base linear, base angular, joint rates] with the
base twist expressed in the base frame. Jacobians are world-aligned and taken
at the frame origin, so J(q) v gives (dp/dt, omega) of the frame in world
axes. All spatial 6-vectors are (linear, angular).
"""

import numpy as np

from ..se3 import (
    Transform,
    motion_cross,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_to_rot,
    skew,
    spatial_inertia_matrix,
)
from .model import FLOATING, PRISMATIC, REVOLUTE, ModelError

GRAVITY = np.array([0.0, 0.0, -9.81])


class ForwardKinematics:
    """World poses of every body plus cached per-joint world data."""

    def __init__(self, tree, q):
        q = tree.check_configuration(q)
        self.tree = tree
        self.q = q
        nb = tree.n_bodies
        self.body = [None] * nb
        self.joint_axis_world = [None] * nb
        self.joint_origin_world = [None] * nb

        base = Transform.from_quat_pos(quat_normalize(q[3:7]), q[0:3])
        self.body[0] = base
        for i in range(1, nb):
            j = tree.joints[i]
            parent_pose = self.body[j.parent]
            joint_frame = parent_pose.compose(j.placement)
            theta = q[7 + i - 1]
            if j.kind == REVOLUTE:
                motion = Transform(_rodrigues(j.axis, theta), np.zeros(3))
            elif j.kind == PRISMATIC:
                motion = Transform(np.eye(3), j.axis * theta)
            else:  # pragma: no cover - excluded by model validation
                raise ModelError("nested floating joints are not supported")
            self.body[i] = joint_frame.compose(motion)
            self.joint_axis_world[i] = joint_frame.R @ j.axis
            self.joint_origin_world[i] = joint_frame.p

    def frame_pose(self, name):
        f = self.tree.frames[name]
        return self.body[f.body].compose(f.placement)

    def body_path(self, body):
        """Joint indices from the root to `body`, base excluded."""
        path = []
        i = body
        while i > 0:
            path.append(i)
            i = self.tree.joints[i].parent
        path.reverse()
        return path


def forward_kinematics(tree, q):
    """World pose of every body and named frame.

    Returns (body_poses, frame_poses) as lists / dicts of Transform.
    """
    fk = ForwardKinematics(tree, q)
    frames = {name: fk.frame_pose(name) for name in tree.frames}
    return fk.body, frames


def _rodrigues(axis, theta):
    c, s = np.cos(theta), np.sin(theta)
    K = skew(axis)
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _point_jacobian(tree, fk, body, point_world, out=None):
    """6 x nv world-aligned Jacobian of a point rigidly attached to `body`."""
    nv = tree.nv
    J = np.zeros((6, nv)) if out is None else out
    Rb = fk.body[0].R
    pb = fk.body[0].p
    J[:3, 0:3] = Rb
    J[:3, 3:6] = -skew(point_world - pb) @ Rb
    J[3:, 3:6] = Rb
    for i in fk.body_path(body):
        col = 6 + i - 1
        a = fk.joint_axis_world[i]
        if tree.joints[i].kind == REVOLUTE:
            J[:3, col] = np.cross(a, point_world - fk.joint_origin_world[i])
            J[3:, col] = a
        else:  # prismatic
            J[:3, col] = a
    return J


def frame_jacobian(tree, q, frame, fk=None):
    """World-aligned Jacobian at the origin of a named frame."""
    if frame not in tree.frames:
        raise ModelError(f"unknown frame {frame!r}")
    fk = fk or ForwardKinematics(tree, q)
    f = tree.frames[frame]
    pose = fk.body[f.body].compose(f.placement)
    return _point_jacobian(tree, fk, f.body, pose.p)


def body_spatial_inertia_world(tree, fk, i):
    """Spatial inertia of body i about its frame origin, world-aligned axes."""
    si = tree.inertias[i]
    R = fk.body[i].R
    return spatial_inertia_matrix(si.mass, R @ si.com, R @ si.inertia @ R.T)


def mass_matrix(tree, q, fk=None):
    """Joint-space mass matrix, assembled as sum of J^T I J over bodies."""
    fk = fk or ForwardKinematics(tree, q)
    nv = tree.nv
    M = np.zeros((nv, nv))
    J = np.empty((6, nv))
    for i in range(tree.n_bodies):
        J[:] = 0.0
        _point_jacobian(tree, fk, i, fk.body[i].p, out=J)
        I6 = body_spatial_inertia_world(tree, fk, i)
        M += J.T @ (I6 @ J)
    return 0.5 * (M + M.T)


def _joint_subspace(joint):
    S = np.zeros(6)
    if joint.kind == REVOLUTE:
        S[3:] = joint.axis
    else:
        S[:3] = joint.axis
    return S


def _ad_transform(T):
    """Plücker transform for (linear, angular) twists: V_parent = X V_child."""
    X = np.zeros((6, 6))
    X[:3, :3] = T.R
    X[:3, 3:] = skew(T.p) @ T.R
    X[3:, 3:] = T.R
    return X


def inverse_dynamics(tree, q, v, vdot, gravity=GRAVITY, fk=None):
    """Generalized forces M(q) vdot + b(q, v) via recursive Newton-Euler.

    No contact forces; gravity enters through a fictitious base acceleration.
    Returns the full (6 + n) vector; rows 0:6 are the floating-base rows.
    """
    v = tree.check_velocity(v)
    vdot = tree.check_velocity(np.asarray(vdot, dtype=float))
    fk = fk or ForwardKinematics(tree, q)
    nb = tree.n_bodies

    V = [None] * nb
    A = [None] * nb
    F = [None] * nb

    base_inv = fk.body[0].inverse()
    V[0] = v[0:6].copy()
    a_grav = np.concatenate([-gravity, np.zeros(3)])
    A[0] = _ad_transform(base_inv) @ a_grav + vdot[0:6]

    X_from_parent = [None] * nb
    for i in range(1, nb):
        j = tree.joints[i]
        rel = fk.body[i].inverse().compose(fk.body[j.parent])
        X = _ad_transform(rel)  # twists: parent coords -> child coords
        X_from_parent[i] = X
        S = _joint_subspace(j)
        qd = v[6 + i - 1]
        qdd = vdot[6 + i - 1]
        V[i] = X @ V[j.parent] + S * qd
        A[i] = X @ A[j.parent] + S * qdd + motion_cross(V[i]) @ (S * qd)

    for i in range(nb):
        si = tree.inertias[i]
        G = spatial_inertia_matrix(si.mass, si.com, si.inertia)
        F[i] = G @ A[i] - motion_cross(V[i]).T @ (G @ V[i])

    tau = np.zeros(tree.nv)
    for i in range(nb - 1, 0, -1):
        j = tree.joints[i]
        S = _joint_subspace(j)
        tau[6 + i - 1] = S @ F[i]
        # wrenches transform with the transposed twist map (duality)
        F[j.parent] = F[j.parent] + X_from_parent[i].T @ F[i]
    tau[0:6] = F[0]
    return tau


def nonlinear_effects(tree, q, v, gravity=GRAVITY, fk=None):
    """Coriolis, centrifugal and gravity generalized forces b(q, v)."""
    return inverse_dynamics(tree, q, v, np.zeros(tree.nv), gravity=gravity, fk=fk)


def com_position(tree, q, fk=None):
    """World center of mass (mass-weighted mean of link centers)."""
    fk = fk or ForwardKinematics(tree, q)
    acc = np.zeros(3)
    for i in range(tree.n_bodies):
        si = tree.inertias[i]
        acc += si.mass * fk.body[i].apply(si.com)
    return acc / tree.total_mass


def momentum_transform(tree, q, fk=None):
    """6x6 map from base-frame momentum at the base origin to world-aligned
    momentum about the center of mass."""
    fk = fk or ForwardKinematics(tree, q)
    c = com_position(tree, q, fk=fk)
    Rb, pb = fk.body[0].R, fk.body[0].p
    O = np.zeros((6, 6))
    O[:3, :3] = Rb
    O[3:, :3] = skew(pb - c) @ Rb
    O[3:, 3:] = Rb
    return O


def centroidal_momentum_matrix(tree, q, fk=None, M=None):
    """A(q) with h = A(q) v, h = (linear, angular) about the CoM, world axes.

    The base rows of the mass matrix are the system momentum in base
    coordinates; A is that block re-expressed at the center of mass.
    """
    fk = fk or ForwardKinematics(tree, q)
    if M is None:
        M = mass_matrix(tree, q, fk=fk)
    return momentum_transform(tree, q, fk=fk) @ M[0:6, :]


def integrate_configuration(tree, q, v, dt):
    """One Euler step on the configuration manifold.

    Base position advances along the rotated linear velocity; base orientation
    by the exponential of the body-frame angular rate; the quaternion is
    renormalized. Joint coordinates advance linearly.
    """
    if dt <= 0.0:
        raise ModelError("time step must be positive")
    q = tree.check_configuration(q)
    v = tree.check_velocity(v)
    R = quat_to_rot(quat_normalize(q[3:7]))
    out = q.copy()
    out[0:3] = q[0:3] + R @ v[0:3] * dt
    out[3:7] = quat_normalize(quat_mul(q[3:7], quat_from_axis_angle(v[3:6] * dt)))
    out[7:] = q[7:] + v[6:] * dt
    return out


def actuated_residual(tree, q, v, vdot, contact_wrenches, gravity=GRAVITY, fk=None):
    """Joint torques required by the actuated rows of the dynamics.

    `contact_wrenches` maps frame name -> world-aligned (force, moment) wrench
    acting on the robot at the frame origin. The caller compares the result
    against tau_min/tau_max.
    """
    fk = fk or ForwardKinematics(tree, q)
    tau = inverse_dynamics(tree, q, v, vdot, gravity=gravity, fk=fk)
    for frame, wrench in contact_wrenches.items():
        if frame not in tree.frames:
            raise ModelError(f"wrench attached to unknown frame {frame!r}")
        J = frame_jacobian(tree, q, frame, fk=fk)
        tau -= J.T @ np.asarray(wrench, dtype=float).reshape(6)
    return tau[6:]


def full_contact_residual(tree, q, v, vdot, contact_wrenches, gravity=GRAVITY, fk=None):
    """All 6+n rows of M vdot + b - sum J^T w (unactuated rows included)."""
    fk = fk or ForwardKinematics(tree, q)
    tau = inverse_dynamics(tree, q, v, vdot, gravity=gravity, fk=fk)
    for frame, wrench in contact_wrenches.items():
        if frame not in tree.frames:
            raise ModelError(f"wrench attached to unknown frame {frame!r}")
        J = frame_jacobian(tree, q, frame, fk=fk)
        tau -= J.T @ np.asarray(wrench, dtype=float).reshape(6)
    return tau
