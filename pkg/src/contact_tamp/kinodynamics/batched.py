"""Batched kinodynamics kernels.

Same quantities as `algorithms`, evaluated for a whole batch of
configurations at once (used by the trajectory optimizer when building
finite-difference constraint Jacobians). Cross-checked against the scalar
implementations in the test suite.
"""

import numpy as np

from ..se3 import spatial_inertia_matrix
from .model import PRISMATIC, REVOLUTE


def skew_batch(v):
    B = v.shape[0]
    out = np.zeros((B, 3, 3))
    out[:, 0, 1] = -v[:, 2]
    out[:, 0, 2] = v[:, 1]
    out[:, 1, 0] = v[:, 2]
    out[:, 1, 2] = -v[:, 0]
    out[:, 2, 0] = -v[:, 1]
    out[:, 2, 1] = v[:, 0]
    return out


def quat_to_rot_batch(q):
    """(B, 4) scalar-last quaternions -> (B, 3, 3); inputs are normalized."""
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    x, y, z, w = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    B = q.shape[0]
    R = np.empty((B, 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def _rodrigues_batch(axis, theta):
    B = theta.shape[0]
    K = np.zeros((3, 3))
    K[0, 1], K[0, 2] = -axis[2], axis[1]
    K[1, 0], K[1, 2] = axis[2], -axis[0]
    K[2, 0], K[2, 1] = -axis[1], axis[0]
    K2 = K @ K
    c = np.cos(theta)[:, None, None]
    s = np.sin(theta)[:, None, None]
    return np.eye(3)[None] + s * K[None] + (1.0 - c) * K2[None]


class BatchKinematics:
    """Forward kinematics and dynamics quantities for (B, nq) configurations."""

    def __init__(self, tree, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = Q[None, :]
        self.tree = tree
        self.Q = Q
        B = Q.shape[0]
        nb = tree.n_bodies
        self.R = np.zeros((B, nb, 3, 3))
        self.p = np.zeros((B, nb, 3))
        self.axis_w = np.zeros((B, nb, 3))
        self.origin_w = np.zeros((B, nb, 3))

        self.R[:, 0] = quat_to_rot_batch(Q[:, 3:7])
        self.p[:, 0] = Q[:, 0:3]
        for i in range(1, nb):
            j = tree.joints[i]
            Rp = self.R[:, j.parent]
            pp = self.p[:, j.parent]
            Rj = Rp @ j.placement.R
            pj = np.einsum("bij,j->bi", Rp, j.placement.p) + pp
            theta = Q[:, 7 + i - 1]
            if j.kind == REVOLUTE:
                self.R[:, i] = Rj @ _rodrigues_batch(j.axis, theta)
                self.p[:, i] = pj
            elif j.kind == PRISMATIC:
                self.R[:, i] = Rj
                self.p[:, i] = pj + np.einsum("bij,j->bi", Rj, j.axis * 1.0) * theta[:, None]
            self.axis_w[:, i] = np.einsum("bij,j->bi", Rj, j.axis)
            self.origin_w[:, i] = pj
        self._paths = [self._path(i) for i in range(nb)]
        self._body_jac = None

    def _path(self, body):
        path = []
        i = body
        while i > 0:
            path.append(i)
            i = self.tree.joints[i].parent
        path.reverse()
        return path

    def point_jacobian(self, body, point_w):
        """(B, 6, nv) world-aligned Jacobian of `point_w` (B, 3) on `body`."""
        tree = self.tree
        B = self.Q.shape[0]
        J = np.zeros((B, 6, tree.nv))
        Rb = self.R[:, 0]
        J[:, :3, 0:3] = Rb
        J[:, :3, 3:6] = -skew_batch(point_w - self.p[:, 0]) @ Rb
        J[:, 3:, 3:6] = Rb
        for i in self._paths[body]:
            col = 6 + i - 1
            a = self.axis_w[:, i]
            if tree.joints[i].kind == REVOLUTE:
                J[:, :3, col] = np.cross(a, point_w - self.origin_w[:, i])
                J[:, 3:, col] = a
            else:
                J[:, :3, col] = a
        return J

    def body_jacobians(self):
        if self._body_jac is None:
            self._body_jac = [
                self.point_jacobian(i, self.p[:, i]) for i in range(self.tree.n_bodies)
            ]
        return self._body_jac

    def frame_pose(self, name):
        f = self.tree.frames[name]
        R = self.R[:, f.body] @ f.placement.R
        p = np.einsum("bij,j->bi", self.R[:, f.body], f.placement.p) + self.p[:, f.body]
        return R, p

    def frame_jacobian(self, name):
        f = self.tree.frames[name]
        _, p = self.frame_pose(name)
        return self.point_jacobian(f.body, p)

    def body_inertia_world(self, i):
        si = self.tree.inertias[i]
        R = self.R[:, i]
        com_w = np.einsum("bij,j->bi", R, si.com)
        C = skew_batch(com_w)
        Iw = R @ si.inertia @ np.transpose(R, (0, 2, 1))
        B = R.shape[0]
        I6 = np.zeros((B, 6, 6))
        I6[:, :3, :3] = si.mass * np.eye(3)
        I6[:, :3, 3:] = -si.mass * C
        I6[:, 3:, :3] = si.mass * C
        I6[:, 3:, 3:] = Iw - si.mass * (C @ C)
        return I6

    def mass_matrix(self):
        tree = self.tree
        B = self.Q.shape[0]
        M = np.zeros((B, tree.nv, tree.nv))
        for i, J in enumerate(self.body_jacobians()):
            I6 = self.body_inertia_world(i)
            M += np.transpose(J, (0, 2, 1)) @ (I6 @ J)
        return 0.5 * (M + np.transpose(M, (0, 2, 1)))

    def com(self):
        acc = np.zeros((self.Q.shape[0], 3))
        for i, si in enumerate(self.tree.inertias):
            acc += si.mass * (np.einsum("bij,j->bi", self.R[:, i], si.com) + self.p[:, i])
        return acc / self.tree.total_mass

    def momentum_transform(self):
        B = self.Q.shape[0]
        c = self.com()
        Rb, pb = self.R[:, 0], self.p[:, 0]
        O = np.zeros((B, 6, 6))
        O[:, :3, :3] = Rb
        O[:, 3:, :3] = skew_batch(pb - c) @ Rb
        O[:, 3:, 3:] = Rb
        return O

    def centroidal_momentum_matrix(self, M=None):
        if M is None:
            M = self.mass_matrix()
        return self.momentum_transform() @ M[:, 0:6, :]

    def bias(self, V, gravity):
        """Batched recursive Newton-Euler with zero acceleration: b(q, v)."""
        tree = self.tree
        B = self.Q.shape[0]
        nb = tree.n_bodies
        Vb = np.zeros((B, nb, 6))
        Ab = np.zeros((B, nb, 6))
        Fb = np.zeros((B, nb, 6))

        Rb = self.R[:, 0]
        Vb[:, 0] = V[:, 0:6]
        # gravity as fictitious base acceleration, rotated into the base frame
        Ab[:, 0, :3] = np.einsum("bji,j->bi", Rb, -gravity)

        Xs = [None] * nb
        for i in range(1, nb):
            j = tree.joints[i]
            # child <- parent twist map built from world poses
            Rrel = np.transpose(self.R[:, i], (0, 2, 1)) @ self.R[:, j.parent]
            prel = np.einsum(
                "bji,bj->bi", self.R[:, i], self.p[:, j.parent] - self.p[:, i]
            )
            X = np.zeros((B, 6, 6))
            X[:, :3, :3] = Rrel
            X[:, :3, 3:] = skew_batch(prel) @ Rrel
            X[:, 3:, 3:] = Rrel
            Xs[i] = X
            S = np.zeros(6)
            if j.kind == REVOLUTE:
                S[3:] = j.axis
            else:
                S[:3] = j.axis
            qd = V[:, 6 + i - 1]
            Vb[:, i] = np.einsum("bij,bj->bi", X, Vb[:, j.parent]) + S[None] * qd[:, None]
            Sqd = S[None] * qd[:, None]
            vi = Vb[:, i]
            wx = skew_batch(vi[:, 3:])
            vx = skew_batch(vi[:, :3])
            cross = np.zeros((B, 6))
            cross[:, :3] = np.einsum("bij,bj->bi", wx, Sqd[:, :3]) + np.einsum(
                "bij,bj->bi", vx, Sqd[:, 3:]
            )
            cross[:, 3:] = np.einsum("bij,bj->bi", wx, Sqd[:, 3:])
            Ab[:, i] = np.einsum("bij,bj->bi", X, Ab[:, j.parent]) + cross

        for i in range(nb):
            si = tree.inertias[i]
            G = spatial_inertia_matrix(si.mass, si.com, si.inertia)
            GV = np.einsum("ij,bj->bi", G, Vb[:, i])
            vi = Vb[:, i]
            wx = skew_batch(vi[:, 3:])
            vx = skew_batch(vi[:, :3])
            adTGV = np.zeros((B, 6))
            # ad_V^T F = (wx^T f, vx^T f + wx^T m)
            adTGV[:, :3] = np.einsum("bji,bj->bi", wx, GV[:, :3])
            adTGV[:, 3:] = np.einsum("bji,bj->bi", vx, GV[:, :3]) + np.einsum(
                "bji,bj->bi", wx, GV[:, 3:]
            )
            Fb[:, i] = np.einsum("ij,bj->bi", G, Ab[:, i]) - adTGV

        tau = np.zeros((B, tree.nv))
        for i in range(nb - 1, 0, -1):
            j = tree.joints[i]
            S = np.zeros(6)
            if j.kind == REVOLUTE:
                S[3:] = j.axis
            else:
                S[:3] = j.axis
            tau[:, 6 + i - 1] = Fb[:, i] @ S
            Fb[:, j.parent] += np.einsum("bji,bj->bi", Xs[i], Fb[:, i])
        tau[:, 0:6] = Fb[:, 0]
        return tau
