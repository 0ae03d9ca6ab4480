"""Rotation and rigid-transform helpers.

Conventions used across the package:

* quaternions are (x, y, z, w), scalar last;
* spatial 6-vectors are ordered (linear, angular);
* rotations are world-from-local unless a name says otherwise.
"""

import numpy as np

EPS = 1e-12

IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


def skew(v):
    """3x3 cross-product matrix: skew(v) @ u == np.cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_normalize(q):
    n = np.linalg.norm(q)
    if n < EPS:
        raise ValueError("cannot normalize near-zero quaternion")
    return np.asarray(q, dtype=float) / n


def quat_to_rot(q):
    """Rotation matrix from an (x, y, z, w) unit quaternion."""
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def rot_to_quat(R):
    """(x, y, z, w) quaternion from a rotation matrix (Shepperd's method)."""
    R = np.asarray(R)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    return quat_normalize(np.array([x, y, z, w]))


def quat_mul(qa, qb):
    """Hamilton product; quat_to_rot(quat_mul(a, b)) == Ra @ Rb."""
    ax, ay, az, aw = qa
    bx, by, bz, bw = qb
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conj(q):
    return np.array([-q[0], -q[1], -q[2], q[3]])


def so3_exp(w):
    """Rotation matrix of the axis-angle vector w (Rodrigues)."""
    theta = np.linalg.norm(w)
    W = skew(w)
    if theta < 1e-8:
        return np.eye(3) + W + 0.5 * (W @ W)
    return (
        np.eye(3)
        + (np.sin(theta) / theta) * W
        + ((1.0 - np.cos(theta)) / theta**2) * (W @ W)
    )


def so3_log(R):
    """Axis-angle vector of a rotation matrix; inverse of so3_exp."""
    R = np.asarray(R)
    tr = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    theta = np.arccos(tr)
    if theta < 1e-8:
        # first-order: R ~ I + skew(w)
        return 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if np.pi - theta < 1e-6:
        # near pi the off-diagonal formula degenerates; use the symmetric part
        A = (R + np.eye(3)) * 0.5
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        # fix signs from off-diagonal entries
        i = int(np.argmax(axis))
        if axis[i] > 0.0:
            for j in range(3):
                if j != i and A[i, j] < 0.0:
                    axis[j] = -axis[j]
        axis = axis / max(np.linalg.norm(axis), EPS)
        return theta * axis
    return (
        theta
        / (2.0 * np.sin(theta))
        * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    )


def so3_log_batch(R):
    """Axis-angle vectors for a (..., 3, 3) stack of rotations.

    Regular-branch formula with a series fallback near zero; entries within
    1e-4 of a half-turn are routed through the scalar implementation.
    """
    R = np.asarray(R)
    tr = np.clip((R[..., 0, 0] + R[..., 1, 1] + R[..., 2, 2] - 1.0) * 0.5, -1.0, 1.0)
    theta = np.arccos(tr)
    w = 0.5 * np.stack(
        [
            R[..., 2, 1] - R[..., 1, 2],
            R[..., 0, 2] - R[..., 2, 0],
            R[..., 1, 0] - R[..., 0, 1],
        ],
        axis=-1,
    )
    small = theta < 1e-7
    sin_t = np.sin(np.where(small, 1.0, theta))
    scale = np.where(small, 1.0 + theta**2 / 6.0, theta / np.where(small, 1.0, sin_t))
    out = w * scale[..., None]
    near_pi = theta > np.pi - 1e-4
    if np.any(near_pi):
        flat = out.reshape(-1, 3)
        Rf = R.reshape(-1, 3, 3)
        for idx in np.nonzero(near_pi.reshape(-1))[0]:
            flat[idx] = so3_log(Rf[idx])
        out = flat.reshape(out.shape)
    return out


def quat_from_axis_angle(w):
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        q = np.array([0.5 * w[0], 0.5 * w[1], 0.5 * w[2], 1.0])
        return quat_normalize(q)
    axis = w / theta
    s = np.sin(0.5 * theta)
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, np.cos(0.5 * theta)])


def rpy_to_rot(rpy):
    """Rotation from roll-pitch-yaw (extrinsic x-y-z): Rz(y) Ry(p) Rx(r)."""
    r, p, y = rpy
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


class Transform:
    """Rigid transform (R, p): maps local points to parent, x_p = R x + p."""

    __slots__ = ("R", "p")

    def __init__(self, R=None, p=None):
        self.R = np.eye(3) if R is None else np.asarray(R, dtype=float)
        self.p = np.zeros(3) if p is None else np.asarray(p, dtype=float)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_quat_pos(cls, quat, pos):
        return cls(quat_to_rot(quat), pos)

    @classmethod
    def from_rpy_pos(cls, rpy, pos):
        return cls(rpy_to_rot(rpy), pos)

    def compose(self, other):
        return Transform(self.R @ other.R, self.R @ other.p + self.p)

    def inverse(self):
        Rt = self.R.T
        return Transform(Rt, -Rt @ self.p)

    def apply(self, x):
        return self.R @ x + self.p

    def quat(self):
        return rot_to_quat(self.R)

    def __repr__(self):
        return f"Transform(p={self.p}, quat={self.quat()})"


def motion_cross(V):
    """6x6 se(3) adjoint of a (linear, angular) twist: ad_V."""
    v, w = V[:3], V[3:]
    out = np.zeros((6, 6))
    out[:3, :3] = skew(w)
    out[:3, 3:] = skew(v)
    out[3:, 3:] = skew(w)
    return out


def spatial_inertia_matrix(mass, com, inertia):
    """6x6 spatial inertia about the frame origin, (linear, angular) order.

    `com` is the center-of-mass offset in the frame, `inertia` the 3x3
    rotational inertia about the center of mass.
    """
    C = skew(com)
    out = np.zeros((6, 6))
    out[:3, :3] = mass * np.eye(3)
    out[:3, 3:] = -mass * C
    out[3:, :3] = mass * C
    out[3:, 3:] = np.asarray(inertia) - mass * (C @ C)
    return out


def wrench_shift(wrench, r):
    """Re-express a (force, moment) pair at a reference point shifted by -r.

    If `wrench` acts with moment taken about point a, the result has its
    moment about point b where r = a - b (same coordinate axes).
    """
    f, m = wrench[:3], wrench[3:]
    return np.concatenate([f, m + np.cross(r, f)])
