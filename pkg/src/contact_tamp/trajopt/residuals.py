"""Per-knot dynamics residuals in their reference (scalar) form.

These are the building blocks the transcription stacks over the horizon;
they are exposed separately so each one can be unit-tested against
independent oracles.
"""

import numpy as np

from ..kinodynamics import (
    ForwardKinematics,
    actuated_residual,
    centroidal_momentum_matrix,
    com_position,
    integrate_configuration,
    mass_matrix,
)
from ..se3 import (
    motion_cross,
    quat_to_rot,
    so3_log,
    spatial_inertia_matrix,
)


def configuration_defect(tree, q_next, q_now, v_now, dt):
    """Tangent-space gap between q_next and the Euler step from (q_now, v_now)."""
    pred = integrate_configuration(tree, q_now, v_now, dt)
    dp = q_next[0:3] - pred[0:3]
    Rn = quat_to_rot(q_next[3:7] / np.linalg.norm(q_next[3:7]))
    Rp = quat_to_rot(pred[3:7])
    drot = so3_log(Rp.T @ Rn)
    dj = q_next[7:] - pred[7:]
    return np.concatenate([dp, drot, dj])


def momentum_rate(total_mass, gravity, com, contact_points, contact_wrenches_world):
    """Centroidal momentum rate from gravity plus world contact wrenches.

    `contact_points` are the application points, `contact_wrenches_world`
    the (force, moment) pairs in world axes.
    """
    f_tot = total_mass * gravity
    k_tot = np.zeros(3)
    for r, w in zip(contact_points, contact_wrenches_world):
        f, kappa = w[0:3], w[3:6]
        f_tot = f_tot + f
        k_tot = k_tot + np.cross(r - com, f) + kappa
    return np.concatenate([f_tot, k_tot])


def robot_dynamics_residual(tree, knot, knot_next, dt, gravity, contacts):
    """Stacked robot integration and momentum residuals for one interval.

    `knot`/`knot_next` are dicts with q, v, h (and vdot on `knot`);
    `contacts` is a list of (application_point, world_wrench). Returns the
    concatenation of the configuration defect, velocity defect, momentum
    integration defect and the momentum consistency h - A(q) v at the
    current knot.
    """
    r_q = configuration_defect(tree, knot_next["q"], knot["q"], knot["v"], dt)
    r_v = knot_next["v"] - knot["v"] - knot["vdot"] * dt
    hdot = momentum_rate(
        tree.total_mass,
        gravity,
        com_position(tree, knot["q"]),
        [c[0] for c in contacts],
        [c[1] for c in contacts],
    )
    r_h = knot_next["h"] - knot["h"] - hdot * dt
    A = centroidal_momentum_matrix(tree, knot["q"])
    r_cons = knot["h"] - A @ knot["v"]
    return np.concatenate([r_q, r_v, r_h, r_cons])


def torque_limit_residual(tree, q, v, vdot, frame_wrenches_world, gravity):
    """Two-sided torque inequality rows (<= 0 when satisfied).

    Rows: [tau - tau_max, tau_min - tau].
    """
    fk = ForwardKinematics(tree, q)
    tau = actuated_residual(tree, q, v, vdot, frame_wrenches_world, gravity=gravity, fk=fk)
    return np.concatenate([tau - tree.tau_max, tree.tau_min - tau])


def object_spatial_inertia(obj):
    return spatial_inertia_matrix(obj.inertia.mass, obj.inertia.com, obj.inertia.inertia)


def object_dynamics_residual(obj, pose, twist, acc, body_wrenches, gravity):
    """Twist-wrench balance in the object body frame.

    `body_wrenches` already expressed in the body frame about the body
    origin. Residual = sum(W) + W_grav - (G acc - ad_V^T G V).
    """
    G = object_spatial_inertia(obj)
    R = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
    f_grav = obj.inertia.mass * (R.T @ gravity)
    w_grav = np.concatenate([f_grav, np.cross(obj.inertia.com, f_grav)])
    total = w_grav.copy()
    for w in body_wrenches:
        total = total + np.asarray(w)
    momentum_terms = G @ acc - motion_cross(twist).T @ (G @ twist)
    return total - momentum_terms


def object_pose_defect(pose_next, pose_now, twist_now, dt):
    """Euler-step defect for an object pose under a body-frame twist."""
    R = quat_to_rot(pose_now[3:7] / np.linalg.norm(pose_now[3:7]))
    p_pred = pose_now[0:3] + R @ twist_now[0:3] * dt
    from ..se3 import quat_from_axis_angle, quat_mul, quat_normalize

    quat_pred = quat_normalize(
        quat_mul(pose_now[3:7] / np.linalg.norm(pose_now[3:7]), quat_from_axis_angle(twist_now[3:6] * dt))
    )
    dp = pose_next[0:3] - p_pred
    Rn = quat_to_rot(pose_next[3:7] / np.linalg.norm(pose_next[3:7]))
    drot = so3_log(quat_to_rot(quat_pred).T @ Rn)
    return np.concatenate([dp, drot])


def integrate_object_pose(pose, twist, dt):
    from ..se3 import quat_from_axis_angle, quat_mul, quat_normalize

    R = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
    p = pose[0:3] + R @ twist[0:3] * dt
    quat = quat_normalize(quat_mul(pose[3:7], quat_from_axis_angle(twist[3:6] * dt)))
    return np.concatenate([p, quat])
