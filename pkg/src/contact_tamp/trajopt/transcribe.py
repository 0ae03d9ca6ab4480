"""Transcription of a symbolic contact sequence into a sparse NLP.

Discretization: K phases x N_s control knots; state knots number N + 1.
Control knot i couples state knots i and i+1 through Euler defects with
dt = T_k / N_s. Contact constraints of phase k apply at its control knots;
the closing state knot of a phase inherits position-level rows for pairs
that do not persist into the next phase (and for every pair of the final
phase at the terminal knot), which pins touchdown/liftoff geometry without
constraining separation velocities.

Wrench conventions: one 6d wrench per robot interface per control knot,
expressed in the axes of the support patch it touches, acting on the robot
at the interface frame origin; objects carry one support wrench in the same
convention. Wrenches of inactive pairs are fixed to zero through variable
bounds, so no force can act at a distance. Newton's third law closes the
loop: grasp wrenches enter the object dynamics negated and transformed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..kinodynamics.batched import BatchKinematics, quat_to_rot_batch, skew_batch
from ..nlp import NLPProblem
from ..scene import ContactType, POINT
from ..se3 import quat_to_rot, skew
from . import collision as coll
from .contacts import (
    cop_inequalities,
    friction_cone_inequalities,
    halfspace_inequality,
    patch_alignment_equalities,
    patch_bound_inequalities,
    point_patch_equalities,
    rotated_half_extents,
)
from .plan import CostSpec, PhasePlan, TranscriptionError, VariableLayout
from .residuals import configuration_defect, integrate_object_pose, object_spatial_inertia

_FD_STEP = 1e-6


@dataclass
class Block:
    label: str
    kind: str  # eq | ineq
    knot: int
    rows: slice
    meta: dict

    @property
    def dim(self):
        return self.rows.stop - self.rows.start


class _Contact:
    """Resolved active pair: attached side (robot ee or object face) on a support."""

    __slots__ = (
        "kind",
        "attached",
        "sup",
        "theta",
        "obj_name",
        "mu",
        "mu_r",
    )

    def __init__(self, kind, attached, sup, theta, obj_name=None):
        self.kind = kind  # robot | object
        self.attached = attached
        self.sup = sup
        self.theta = theta
        self.obj_name = obj_name
        self.mu = min(attached.mu, sup.mu)
        self.mu_r = min(attached.mu_r, sup.mu_r)

    @property
    def is_point(self):
        return self.attached.geometry == POINT

    @property
    def unilateral(self):
        return self.theta.unilateral

    def pair_key(self):
        return (self.attached.id, self.sup.id)


class Transcription:
    """Builds and evaluates the NLP for one contact sequence."""

    def __init__(self, scene, sequence, plan=None, cost=None):
        self.scene = scene
        plan = plan or PhasePlan(states=tuple(sequence))
        if tuple(plan.states) != tuple(frozenset(s) for s in sequence):
            raise TranscriptionError("plan states must match the sequence")
        plan.validate(scene)
        self.plan = plan
        self.cost_spec = cost or CostSpec()
        self.layout = VariableLayout(scene, plan)
        self.tree = scene.tree
        self.gravity = scene.gravity
        self.n_act = self.tree.n_joints

        self._analyze_phases()
        self._frame_names = self._collect_frames()
        self._build_ledger()
        self._build_bounds()
        self._cache = {}

    # ------------------------------------------------------------------
    # phase analysis

    def _classify_pair(self, i, j, theta):
        scene = self.scene
        a, b = scene.interface(i), scene.interface(j)
        if a.owner_kind == "robot":
            if b.geometry == POINT:
                raise TranscriptionError(f"support side of ({i}, {j}) is a point")
            return _Contact("robot", a, b, theta)
        if a.owner_kind == "object" and b.owner_kind in ("env", "object"):
            if a.geometry == POINT or b.geometry == POINT:
                raise TranscriptionError(f"object pair ({i}, {j}) must be patch-patch")
            # resolve which side rests on which
            if i in scene.object(a.owner).support_faces:
                return _Contact("object", a, b, theta, obj_name=a.owner)
            if b.owner_kind == "object" and j in scene.object(b.owner).support_faces:
                return _Contact("object", b, a, theta, obj_name=b.owner)
            raise TranscriptionError(
                f"cannot resolve support direction for object pair ({i}, {j})"
            )
        raise TranscriptionError(f"unsupported pair ({i}, {j})")

    def _analyze_phases(self):
        self.phase_contacts = []
        self.phase_object_support = []
        self.phase_grasps = []  # obj -> robot contacts attached to it
        self.phase_child_supports = []  # obj -> object contacts it supports
        for k, state in enumerate(self.plan.states):
            contacts = [self._classify_pair(i, j, th) for i, j, th in sorted(state)]
            supports = {}
            grasps = {o.name: [] for o in self.scene.objects}
            children = {o.name: [] for o in self.scene.objects}
            for c in contacts:
                if c.kind == "object":
                    if not c.unilateral:
                        raise TranscriptionError(
                            f"object support ({c.attached.id}, {c.sup.id}) must be unilateral"
                        )
                    if c.obj_name in supports:
                        raise TranscriptionError(
                            f"object {c.obj_name!r} has two support contacts in phase {k}"
                        )
                    supports[c.obj_name] = c
                    if c.sup.owner_kind == "object":
                        children[c.sup.owner].append(c)
                else:
                    if c.sup.owner_kind == "object":
                        grasps[c.sup.owner].append(c)
            self.phase_contacts.append(contacts)
            self.phase_object_support.append(supports)
            self.phase_grasps.append(grasps)
            self.phase_child_supports.append(children)

    def _collect_frames(self):
        names = [i.owner for i in self.scene.robot_interfaces]
        for box in self.scene.collision_boxes:
            if box["frame"] not in names and box["frame"] in self.tree.frames:
                names.append(box["frame"])
        return names

    # ------------------------------------------------------------------
    # ledger

    def _build_ledger(self):
        self.eq_blocks = []
        self.ineq_blocks = []
        plan, nv = self.plan, self.tree.nv
        eq_off = 0
        ineq_off = 0

        def add_eq(label, knot, dim, **meta):
            nonlocal eq_off
            self.eq_blocks.append(Block(label, "eq", knot, slice(eq_off, eq_off + dim), meta))
            eq_off += dim

        def add_ineq(label, knot, dim, **meta):
            nonlocal ineq_off
            self.ineq_blocks.append(
                Block(label, "ineq", knot, slice(ineq_off, ineq_off + dim), meta)
            )
            ineq_off += dim

        N = plan.n_control
        for i in range(N):
            k = plan.phase_of(i)
            add_eq("config-defect", i, nv, phase=k)
            add_eq("velocity-defect", i, nv, phase=k)
            add_eq("momentum-defect", i, 6, phase=k)
            add_eq("momentum-consistency", i, 6)
            add_eq("quaternion-norm", i, 1)
            for obj in self.scene.objects:
                add_eq("object-pose-defect", i, 6, obj=obj.name, phase=k)
                add_eq("object-twist-defect", i, 6, obj=obj.name, phase=k)
                add_eq("object-dynamics", i, 6, obj=obj.name, phase=k)
                add_eq("object-quaternion-norm", i, 1, obj=obj.name)
            for c in self.phase_contacts[k]:
                dim = 3 if c.is_point else 6
                add_eq("contact-kinematics", i, dim, contact=c, phase=k)

            add_ineq("torque-limits", i, 2 * self.n_act, phase=k)
            for c in self.phase_contacts[k]:
                if c.kind == "robot" and c.is_point:
                    add_ineq("limb-halfspace", i, 1, contact=c, phase=k)
                if c.sup.bounded:
                    add_ineq("patch-bounds", i, 4, contact=c, phase=k)
                if c.unilateral:
                    add_ineq("friction-cone", i, 2, contact=c, phase=k)
                    if not c.is_point:
                        add_ineq("cop-bounds", i, 6, contact=c, phase=k)

        # phase-boundary inheritance (position level only)
        for k in range(1, plan.n_phases + 1):
            knot = k * plan.knots_per_phase
            prev = self.phase_contacts[k - 1]
            cur_keys = (
                {c.pair_key() for c in self.phase_contacts[k]} if k < plan.n_phases else set()
            )
            for c in prev:
                if c.pair_key() in cur_keys:
                    continue
                dim = 1 if c.is_point else 3
                add_eq("contact-closing", knot, dim, contact=c, phase=k - 1)
                if c.sup.bounded:
                    add_ineq("patch-bounds-closing", knot, 4, contact=c, phase=k - 1)

        add_eq("momentum-consistency", N, 6)
        add_eq("quaternion-norm", N, 1)
        for obj in self.scene.objects:
            add_eq("object-quaternion-norm", N, 1, obj=obj.name)
        if self.cost_spec.terminal_rest:
            add_eq("terminal-rest", N, nv)
            for obj in self.scene.objects:
                add_eq("object-terminal-rest", N, 6, obj=obj.name)
        for name, (target, tol) in sorted(self.cost_spec.object_goals.items()):
            add_ineq("object-goal-band", N, 6, obj=name, target=np.asarray(target, float), tol=float(tol))

        self.n_eq = eq_off
        self.n_ineq = ineq_off

    def block_counts(self):
        """Ledger summary {(label, kind): count} for auditing."""
        out = {}
        for b in self.eq_blocks + self.ineq_blocks:
            out[(b.label, b.kind)] = out.get((b.label, b.kind), 0) + 1
        return out

    # ------------------------------------------------------------------
    # bounds and initial fixing

    def _build_bounds(self):
        L = self.layout
        lb = np.full(L.n, -np.inf)
        ub = np.full(L.n, np.inf)
        x0s = self.scene.x_init

        for sl, val in (
            (L.q(0), x0s.robot_q),
            (L.v(0), x0s.robot_v),
        ):
            lb[sl] = val
            ub[sl] = val
        from ..kinodynamics import centroidal_momentum_matrix

        h0 = centroidal_momentum_matrix(self.tree, x0s.robot_q) @ x0s.robot_v
        lb[L.h(0)] = h0
        ub[L.h(0)] = h0
        for obj in self.scene.objects:
            lb[L.obj_pose(obj.name, 0)] = x0s.object_poses[obj.name]
            ub[L.obj_pose(obj.name, 0)] = x0s.object_poses[obj.name]
            lb[L.obj_twist(obj.name, 0)] = x0s.object_twists[obj.name]
            ub[L.obj_twist(obj.name, 0)] = x0s.object_twists[obj.name]

        # quaternion components stay in a sane box
        for i in range(L.n_state):
            sl = L.q(i)
            lb[sl.start + 3 : sl.start + 7] = np.maximum(lb[sl.start + 3 : sl.start + 7], -1.1)
            ub[sl.start + 3 : sl.start + 7] = np.minimum(ub[sl.start + 3 : sl.start + 7], 1.1)
            for obj in self.scene.objects:
                sl = L.obj_pose(obj.name, i)
                lb[sl.start + 3 : sl.start + 7] = np.maximum(lb[sl.start + 3 : sl.start + 7], -1.1)
                ub[sl.start + 3 : sl.start + 7] = np.minimum(ub[sl.start + 3 : sl.start + 7], 1.1)

        # inactive wrenches pinned to zero; unilateral point contacts carry no moment
        for i in range(L.n_control):
            k = self.plan.phase_of(i)
            active = {}
            for c in self.phase_contacts[k]:
                if c.kind == "robot":
                    active[c.attached.id] = c
            for ee_id in L.ee_ids:
                sl = L.wrench(ee_id, i)
                c = active.get(ee_id)
                if c is None:
                    lb[sl] = 0.0
                    ub[sl] = 0.0
                elif c.is_point and c.unilateral:
                    lb[sl.start + 3 : sl.stop] = 0.0
                    ub[sl.start + 3 : sl.stop] = 0.0
            for obj in self.scene.objects:
                if obj.name not in self.phase_object_support[k]:
                    sl = L.obj_wenv(obj.name, i)
                    lb[sl] = 0.0
                    ub[sl] = 0.0

        tb = L.tbar_all()
        lb[tb] = self.plan.t_min
        ub[tb] = self.plan.t_max
        self.lb, self.ub = lb, ub

    # ------------------------------------------------------------------
    # variable access helpers

    def split(self, x):
        L = self.layout
        N1, N = L.n_state, L.n_control
        Q = np.stack([x[L.q(i)] for i in range(N1)])
        V = np.stack([x[L.v(i)] for i in range(N1)])
        H = np.stack([x[L.h(i)] for i in range(N1)])
        VD = np.stack([x[L.vdot(i)] for i in range(N)]) if N else np.zeros((0, L.nv))
        LAM = {e: np.stack([x[L.wrench(e, i)] for i in range(N)]) for e in L.ee_ids}
        objs = {}
        for obj in self.scene.objects:
            objs[obj.name] = {
                "pose": np.stack([x[L.obj_pose(obj.name, i)] for i in range(N1)]),
                "twist": np.stack([x[L.obj_twist(obj.name, i)] for i in range(N1)]),
                "acc": np.stack([x[L.obj_acc(obj.name, i)] for i in range(N)]),
                "wenv": np.stack([x[L.obj_wenv(obj.name, i)] for i in range(N)]),
            }
        T = x[L.tbar_all()].copy()
        return {"Q": Q, "V": V, "H": H, "VD": VD, "LAM": LAM, "objs": objs, "T": T}

    def dt_of_phase(self, vars, k):
        return vars["T"][k] / self.plan.knots_per_phase

    # ------------------------------------------------------------------
    # support-frame geometry

    def support_world(self, c, vars, i):
        """(R_j, p_j) world pose of the support patch of contact `c` at knot i."""
        sup = c.sup
        if sup.owner_kind == "env":
            return sup.placement.R, sup.placement.p
        pose = vars["objs"][sup.owner]["pose"][i]
        Ro = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
        return Ro @ sup.placement.R, Ro @ sup.placement.p + pose[0:3]

    def support_point_velocity(self, c, vars, i, point_w):
        """World velocity of the support material point under `point_w`."""
        sup = c.sup
        if sup.owner_kind == "env":
            return np.zeros(3), np.zeros(3)
        pose = vars["objs"][sup.owner]["pose"][i]
        twist = vars["objs"][sup.owner]["twist"][i]
        Ro = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
        w_world = Ro @ twist[3:6]
        v_world = Ro @ twist[0:3] + np.cross(w_world, point_w - pose[0:3])
        return v_world, w_world

    def attached_object_world(self, c, vars, i):
        """World pose and velocities of an object-owned attached face."""
        pose = vars["objs"][c.obj_name]["pose"][i]
        twist = vars["objs"][c.obj_name]["twist"][i]
        Ro = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
        Rf = Ro @ c.attached.placement.R
        pf = Ro @ c.attached.placement.p + pose[0:3]
        w_world = Ro @ twist[3:6]
        v_world = Ro @ twist[0:3] + np.cross(w_world, pf - pose[0:3])
        return Rf, pf, v_world, w_world

    # ------------------------------------------------------------------
    # batched robot pack

    class _Pack:
        __slots__ = (
            "M",
            "A",
            "bias",
            "com",
            "frames",
            "base_row",
            "qrows_plus",
            "qrows_minus",
            "vrows_plus",
            "vrows_minus",
        )

    def _make_pack(self, Q, V):
        bk = BatchKinematics(self.tree, Q)
        pack = Transcription._Pack()
        pack.M = bk.mass_matrix()
        pack.A = bk.centroidal_momentum_matrix(pack.M)
        pack.bias = bk.bias(V, self.gravity)
        pack.com = bk.com()
        pack.frames = {}
        for name in self._frame_names:
            R, p = bk.frame_pose(name)
            J = bk.frame_jacobian(name)
            pack.frames[name] = (R, p, J)
        return pack

    def _base_pack(self, vars):
        pack = self._make_pack(vars["Q"], vars["V"])
        pack.base_row = np.arange(self.layout.n_state)
        return pack

    # ------------------------------------------------------------------
    # block evaluation (vectorized over pack rows where q-dependent)

    def _robot_contact_fixtures(self, c, vars, i):
        """Support pose/velocities and wrench of a robot contact at knot i."""
        R_j, p_j = self.support_world(c, vars, i)
        lam = vars["LAM"][c.attached.id][i] if i < self.layout.n_control else np.zeros(6)
        return R_j, p_j, lam

    def _world_wrench(self, R_j, lam):
        return np.concatenate([R_j @ lam[0:3], R_j @ lam[3:6]])

    def _eval_rows(self, b, vars, pack, rows):
        """Residual of block `b` for a batch of pack rows (q/v perturbations)."""
        label, i = b.label, b.knot
        L = self.layout
        if label == "momentum-defect":
            k = b.meta["phase"]
            dt = self.dt_of_phase(vars, k)
            com = pack.com[rows]
            f_tot = np.broadcast_to(self.tree.total_mass * self.gravity, com.shape).copy()
            k_tot = np.zeros_like(com)
            for c in self.phase_contacts[k]:
                if c.kind != "robot":
                    continue
                R_j, p_j, lam = self._robot_contact_fixtures(c, vars, i)
                w = self._world_wrench(R_j, lam)
                r_e = pack.frames[c.attached.owner][1][rows]
                f_tot = f_tot + w[0:3]
                k_tot = k_tot + np.cross(r_e - com, w[0:3]) + w[3:6]
            hdot = np.concatenate([f_tot, k_tot], axis=-1)
            return vars["H"][i + 1] - vars["H"][i] - dt * hdot
        if label == "momentum-consistency":
            return vars["H"][i] - np.einsum("rij,j->ri", pack.A[rows], vars["V"][i])
        if label == "torque-limits":
            tau = self._torque_rows(vars, pack, rows, i, b.meta["phase"])
            return np.concatenate([tau - self.tree.tau_max, self.tree.tau_min - tau], axis=-1)
        if label in ("contact-kinematics", "contact-closing", "limb-halfspace", "patch-bounds",
                     "patch-bounds-closing"):
            return self._contact_rows(b, vars, pack, rows)
        raise KeyError(label)

    def _torque_rows(self, vars, pack, rows, i, k):
        vd = vars["VD"][i]
        tau = np.einsum("rij,j->ri", pack.M[rows][:, 6:, :], vd) + pack.bias[rows][:, 6:]
        for c in self.phase_contacts[k]:
            if c.kind != "robot":
                continue
            R_j, _, lam = self._robot_contact_fixtures(c, vars, i)
            w = self._world_wrench(R_j, lam)
            Ja = pack.frames[c.attached.owner][2][rows][:, :, 6:]
            tau = tau - np.einsum("rdj,d->rj", Ja, w)
        return tau

    def _contact_rows(self, b, vars, pack, rows):
        """Contact kinematic rows; robot-attached contacts broadcast over rows."""
        c = b.meta["contact"]
        i = b.knot
        closing = b.label in ("contact-closing", "patch-bounds-closing")
        # state knot for positions is b.knot; velocities use the same index
        if c.kind == "robot":
            name = c.attached.owner
            R_e = pack.frames[name][0][rows]
            p_e = pack.frames[name][1][rows]
            J_e = pack.frames[name][2][rows]
            vel6 = np.einsum("rdj,j->rd", J_e, vars["V"][i])
            v_e, w_e = vel6[:, 0:3], vel6[:, 3:6]
        else:
            R_e, p_e, v_e, w_e = self.attached_object_world(c, vars, i)
            R_e, p_e = R_e[None], p_e[None]
            v_e, w_e = v_e[None], w_e[None]
        R_j, p_j = self.support_world(c, vars, i)
        v_pt, w_j = self.support_point_velocity(c, vars, i, p_e.mean(axis=0))

        if b.label == "limb-halfspace":
            return halfspace_inequality(R_j, R_e)
        if b.label in ("patch-bounds", "patch-bounds-closing"):
            if c.is_point:
                margin = c.sup.half_extents
            else:
                margin = c.sup.half_extents - rotated_half_extents(
                    R_j, R_e, c.attached.half_extents
                )
            return patch_bound_inequalities(p_e, R_j, p_j, margin)

        height = np.einsum("ji,rj->ri", R_j, p_e - p_j)[:, 2:3]
        if closing:
            if c.is_point:
                return height
            align = patch_alignment_equalities(R_j, R_e, w_e, w_j)[..., 0:2]
            return np.concatenate([height, align], axis=-1)
        vrel = np.einsum("ji,rj->ri", R_j, v_e - v_pt)[:, 0:2]
        parts = [height, vrel]
        if not c.is_point:
            parts.append(patch_alignment_equalities(R_j, R_e, w_e, w_j))
        return np.concatenate(parts, axis=-1)

    def _eval_scalar(self, b, vars, pack):
        """Residual of one block at the base point."""
        label, i = b.label, b.knot
        L = self.layout
        if label == "config-defect":
            k = b.meta["phase"]
            dt = self.dt_of_phase(vars, k)
            return configuration_defect(self.tree, vars["Q"][i + 1], vars["Q"][i], vars["V"][i], dt)
        if label == "velocity-defect":
            dt = self.dt_of_phase(vars, b.meta["phase"])
            return vars["V"][i + 1] - vars["V"][i] - vars["VD"][i] * dt
        if label == "quaternion-norm":
            quat = vars["Q"][i][3:7]
            return np.array([quat @ quat - 1.0])
        if label == "object-quaternion-norm":
            quat = vars["objs"][b.meta["obj"]]["pose"][i][3:7]
            return np.array([quat @ quat - 1.0])
        if label == "object-pose-defect":
            dt = self.dt_of_phase(vars, b.meta["phase"])
            o = vars["objs"][b.meta["obj"]]
            from .residuals import object_pose_defect

            return object_pose_defect(o["pose"][i + 1], o["pose"][i], o["twist"][i], dt)
        if label == "object-twist-defect":
            dt = self.dt_of_phase(vars, b.meta["phase"])
            o = vars["objs"][b.meta["obj"]]
            return o["twist"][i + 1] - o["twist"][i] - o["acc"][i] * dt
        if label == "object-dynamics":
            return self._object_dynamics_scalar(b, vars, pack)
        if label == "terminal-rest":
            return vars["V"][i].copy()
        if label == "object-terminal-rest":
            return vars["objs"][b.meta["obj"]]["twist"][i].copy()
        if label == "friction-cone":
            c = b.meta["contact"]
            lam = self._contact_wrench(c, vars, b.knot)
            return friction_cone_inequalities(lam, c.mu)
        if label == "cop-bounds":
            c = b.meta["contact"]
            lam = self._contact_wrench(c, vars, b.knot)
            return cop_inequalities(lam, c.attached.half_extents, c.mu_r)
        if label == "object-goal-band":
            pos = vars["objs"][b.meta["obj"]]["pose"][i][0:3]
            d = pos - b.meta["target"]
            tol = b.meta["tol"]
            return np.concatenate([d - tol, -d - tol])
        # pack-dependent labels fall through to the row evaluator
        return self._eval_rows(b, vars, pack, np.array([pack.base_row[b.knot]]))[0]

    def _contact_wrench(self, c, vars, i):
        if c.kind == "robot":
            return vars["LAM"][c.attached.id][i]
        return vars["objs"][c.obj_name]["wenv"][i]

    def _object_dynamics_scalar(self, b, vars, pack):
        i, k = b.knot, b.meta["phase"]
        name = b.meta["obj"]
        obj = self.scene.object(name)
        o = vars["objs"][name]
        pose, twist, acc = o["pose"][i], o["twist"][i], o["acc"][i]
        Ro = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
        po = pose[0:3]
        G = object_spatial_inertia(obj)
        f_grav = obj.inertia.mass * (Ro.T @ self.gravity)
        total = np.concatenate([f_grav, np.cross(obj.inertia.com, f_grav)])

        sup = self.phase_object_support[k].get(name)
        if sup is not None:
            R_j, _ = self.support_world(sup, vars, i)
            wenv = o["wenv"][i]
            f_w = R_j @ wenv[0:3]
            k_w = R_j @ wenv[3:6]
            p_face = Ro @ sup.attached.placement.p + po
            f_b = Ro.T @ f_w
            k_b = Ro.T @ (np.cross(p_face - po, f_w) + k_w)
            total = total + np.concatenate([f_b, k_b])
        for c in self.phase_grasps[k][name]:
            R_j, _, lam = self._robot_contact_fixtures(c, vars, i)
            w = self._world_wrench(R_j, lam)
            p_e = pack.frames[c.attached.owner][1][pack.base_row[i]]
            f_b = Ro.T @ (-w[0:3])
            k_b = Ro.T @ (-np.cross(p_e - po, w[0:3]) - w[3:6])
            total = total + np.concatenate([f_b, k_b])
        for c in self.phase_child_supports[k][name]:
            # reaction from an object resting on this one
            R_j, _ = self.support_world(c, vars, i)
            wenv = vars["objs"][c.obj_name]["wenv"][i]
            f_w = R_j @ wenv[0:3]
            k_w = R_j @ wenv[3:6]
            up_pose = vars["objs"][c.obj_name]["pose"][i]
            R_up = quat_to_rot(up_pose[3:7] / np.linalg.norm(up_pose[3:7]))
            p_face = R_up @ c.attached.placement.p + up_pose[0:3]
            f_b = Ro.T @ (-f_w)
            k_b = Ro.T @ (-np.cross(p_face - po, f_w) - k_w)
            total = total + np.concatenate([f_b, k_b])

        from ..se3 import motion_cross

        momentum = G @ acc - motion_cross(twist).T @ (G @ twist)
        return total - momentum

    # ------------------------------------------------------------------
    # residual vectors

    _PACK_LABELS = {
        "momentum-defect",
        "momentum-consistency",
        "torque-limits",
        "contact-kinematics",
        "contact-closing",
        "limb-halfspace",
        "patch-bounds",
        "patch-bounds-closing",
    }

    def _residuals(self, x):
        key = hash(x.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        vars = self.split(x)
        pack = self._base_pack(vars)
        eq = np.zeros(self.n_eq)
        ineq = np.zeros(self.n_ineq)
        for b in self.eq_blocks:
            eq[b.rows] = self._eval_scalar(b, vars, pack)
        for b in self.ineq_blocks:
            ineq[b.rows] = self._eval_scalar(b, vars, pack)
        out = (eq, ineq, vars, pack)
        if len(self._cache) > 6:
            self._cache.clear()
        self._cache[key] = out
        return out

    def eq_residual(self, x):
        return self._residuals(x)[0].copy()

    def ineq_residual(self, x):
        return self._residuals(x)[1].copy()

    # ------------------------------------------------------------------
    # cost

    def _resolve_collision_ref(self, ref):
        kind, _, name = ref.partition(":")
        if kind == "frame":
            if name not in self.tree.frames:
                raise TranscriptionError(f"collision frame {name!r} unknown")
            return ("frame", name)
        if kind == "rbox":
            for b in self.scene.collision_boxes:
                if b["frame"] == name:
                    return ("rbox", b)
            raise TranscriptionError(f"robot collision box {name!r} unknown")
        if kind == "obj":
            return ("obj", self.scene.object(name))
        if kind == "ebox":
            for b in self.scene.env_boxes:
                if b["id"] == name:
                    return ("ebox", b)
            raise TranscriptionError(f"environment box {name!r} unknown")
        if kind == "plane":
            return ("plane", self.scene.interface(name))
        raise TranscriptionError(f"unknown collision reference {ref!r}")

    def _collision_terms(self):
        if not hasattr(self, "_coll_terms"):
            self._coll_terms = [
                (self._resolve_collision_ref(a), self._resolve_collision_ref(b))
                for a, b in self.scene.collision_pairs
            ]
        return self._coll_terms

    def _box_world(self, desc, vars, t, pack, rows):
        """(R, p, half) of a collision box; robot boxes broadcast over rows."""
        kind, payload = desc
        if kind == "rbox":
            R_f = pack.frames[payload["frame"]][0][rows]
            p_f = pack.frames[payload["frame"]][1][rows]
            R = R_f @ payload["placement"].R
            p = np.einsum("rij,j->ri", R_f, payload["placement"].p) + p_f
            return R, p, payload["half_sizes"]
        if kind == "obj":
            pose = vars["objs"][payload.name]["pose"][t]
            Ro = quat_to_rot(pose[3:7] / np.linalg.norm(pose[3:7]))
            return Ro[None], pose[None, 0:3], payload.half_sizes
        if kind == "ebox":
            return payload["placement"].R[None], payload["placement"].p[None], payload["half_sizes"]
        raise TranscriptionError(f"not a box: {desc}")

    def _collision_rows(self, vars, pack, rows, t):
        """Total collision penalty at state knot t for a batch of pack rows."""
        spec = self.cost_spec
        if not self._collision_terms() or spec.collision_weight == 0.0:
            return np.zeros(len(rows))
        total = np.zeros(len(rows))
        W, s = spec.collision_weight, spec.collision_sharpness
        for a, b in self._collision_terms():
            if a[0] == "frame" and b[0] == "plane":
                p_f = pack.frames[a[1]][1][rows]
                total = total + coll.frame_plane_penalty(
                    p_f, b[1].placement.R, b[1].placement.p, W, s
                )
            elif a[0] == "frame":
                R2, p2, half2 = self._box_world(b, vars, t, pack, rows)
                p_f = pack.frames[a[1]][1][rows]
                total = total + coll.frame_box_penalty(p_f, R2, p2, half2, W, s)
            else:
                R1, p1, half1 = self._box_world(a, vars, t, pack, rows)
                R2, p2, half2 = self._box_world(b, vars, t, pack, rows)
                total = total + coll.box_box_penalty(R1, p1, half1, R2, p2, half2, W, s)
        return total

    def cost(self, x):
        vars = self.split(x)
        spec = self.cost_spec
        L = self.layout
        val = 0.0
        val += spec.w_velocity * float(np.sum(vars["V"][:-1] ** 2))
        val += spec.w_acceleration * float(np.sum(vars["VD"] ** 2))
        for e in L.ee_ids:
            val += spec.w_wrench * float(np.sum(vars["LAM"][e] ** 2))
        for o in self.scene.objects:
            val += spec.w_object_acceleration * float(np.sum(vars["objs"][o.name]["acc"] ** 2))
            val += spec.w_wrench * float(np.sum(vars["objs"][o.name]["wenv"] ** 2))
        val += spec.w_time * float(np.sum(vars["T"]))
        val -= spec.w_base_height * float(vars["Q"][-1][2])
        for name, (target, _tol) in spec.object_goals.items():
            d = vars["objs"][name]["pose"][-1][0:3] - np.asarray(target)
            val += float(d @ d)
        if self._collision_terms() and spec.collision_weight > 0.0:
            _, _, vars_c, pack = self._residuals(x)
            for t in range(L.n_state):
                val += float(
                    self._collision_rows(vars_c, pack, np.array([pack.base_row[t]]), t)[0]
                )
        return val

    def cost_grad(self, x):
        vars = self.split(x)
        spec = self.cost_spec
        L = self.layout
        g = np.zeros(L.n)
        for i in range(L.n_control):
            g[L.v(i)] += 2.0 * spec.w_velocity * vars["V"][i]
            g[L.vdot(i)] += 2.0 * spec.w_acceleration * vars["VD"][i]
            for e in L.ee_ids:
                g[L.wrench(e, i)] += 2.0 * spec.w_wrench * vars["LAM"][e][i]
            for o in self.scene.objects:
                g[L.obj_acc(o.name, i)] += (
                    2.0 * spec.w_object_acceleration * vars["objs"][o.name]["acc"][i]
                )
                g[L.obj_wenv(o.name, i)] += 2.0 * spec.w_wrench * vars["objs"][o.name]["wenv"][i]
        g[L.tbar_all()] += spec.w_time
        g[L.q(L.n_state - 1).start + 2] -= spec.w_base_height
        for name, (target, _tol) in spec.object_goals.items():
            sl = L.obj_pose(name, L.n_state - 1)
            g[sl.start : sl.start + 3] += 2.0 * (
                vars["objs"][name]["pose"][-1][0:3] - np.asarray(target)
            )
        if self._collision_terms() and spec.collision_weight > 0.0:
            self._collision_grad(x, vars, g)
        return g

    def _collision_grad(self, x, vars, g):
        """Collision gradient via the same FD machinery as the constraints."""
        _, _, vars_c, pack = self._residuals(x)
        L = self.layout
        h = _FD_STEP
        packP = self._perturbation_pack(vars_c)
        for t in range(L.n_state):
            rows_p, rows_m = packP.qrows_plus[t], packP.qrows_minus[t]
            cp = self._collision_rows(vars_c, packP, rows_p, t)
            cm = self._collision_rows(vars_c, packP, rows_m, t)
            g[L.q(t)] += (cp - cm) / (2 * h)
            for o in self.scene.objects:
                sl = L.obj_pose(o.name, t)
                base = np.array([pack.base_row[t]])
                for cidx in range(7):
                    orig = vars_c["objs"][o.name]["pose"][t][cidx]
                    vars_c["objs"][o.name]["pose"][t][cidx] = orig + h
                    vp = self._collision_rows(vars_c, pack, base, t)[0]
                    vars_c["objs"][o.name]["pose"][t][cidx] = orig - h
                    vm = self._collision_rows(vars_c, pack, base, t)[0]
                    vars_c["objs"][o.name]["pose"][t][cidx] = orig
                    g[sl.start + cidx] += (vp - vm) / (2 * h)

    def cost_hess(self, x):
        if not hasattr(self, "_hess_diag"):
            spec = self.cost_spec
            L = self.layout
            d = np.zeros(L.n)
            for i in range(L.n_control):
                d[L.v(i)] += 2.0 * spec.w_velocity
                d[L.vdot(i)] += 2.0 * spec.w_acceleration
                for e in L.ee_ids:
                    d[L.wrench(e, i)] += 2.0 * spec.w_wrench
                for o in self.scene.objects:
                    d[L.obj_acc(o.name, i)] += 2.0 * spec.w_object_acceleration
                    d[L.obj_wenv(o.name, i)] += 2.0 * spec.w_wrench
            for name in spec.object_goals:
                sl = L.obj_pose(name, L.n_state - 1)
                d[sl.start : sl.start + 3] += 2.0
            self._hess_diag = d
        return sp.diags(self._hess_diag).tocsr()

    # ------------------------------------------------------------------
    # Jacobians: batched FD in configuration/velocity, analytic elsewhere,
    # cheap scalar FD for object-side and integrator couplings.

    def _perturbation_pack(self, vars):
        key = hash(vars["Q"].tobytes()) ^ hash(vars["V"].tobytes())
        hit = getattr(self, "_pert_cache", None)
        if hit is not None and hit[0] == key:
            return hit[1]
        L, h = self.layout, _FD_STEP
        N1, N = L.n_state, L.n_control
        nq, nv = L.nq, L.nv
        Qb, Vb = vars["Q"], vars["V"]

        dq = np.zeros((2 * nq, nq))
        dq[np.arange(0, 2 * nq, 2), np.arange(nq)] = h
        dq[np.arange(1, 2 * nq, 2), np.arange(nq)] = -h
        dv = np.zeros((2 * nv, nv))
        dv[np.arange(0, 2 * nv, 2), np.arange(nv)] = h
        dv[np.arange(1, 2 * nv, 2), np.arange(nv)] = -h

        Qq = np.repeat(Qb, 2 * nq, axis=0) + np.tile(dq, (N1, 1))
        Vq = np.repeat(Vb, 2 * nq, axis=0)
        Qv = np.repeat(Qb[:N], 2 * nv, axis=0)
        Vv = np.repeat(Vb[:N], 2 * nv, axis=0) + np.tile(dv, (N, 1))

        pack = self._make_pack(
            np.vstack([Qb, Qq, Qv]), np.vstack([Vb, Vq, Vv])
        )
        pack.base_row = np.arange(N1)
        q0 = N1
        v0 = N1 + N1 * 2 * nq
        pack.qrows_plus = [q0 + t * 2 * nq + np.arange(0, 2 * nq, 2) for t in range(N1)]
        pack.qrows_minus = [q0 + t * 2 * nq + np.arange(1, 2 * nq, 2) for t in range(N1)]
        pack.vrows_plus = [v0 + t * 2 * nv + np.arange(0, 2 * nv, 2) for t in range(N)]
        pack.vrows_minus = [v0 + t * 2 * nv + np.arange(1, 2 * nv, 2) for t in range(N)]
        self._pert_cache = (key, pack)
        return pack

    def _jacobians(self, x):
        key = hash(x.tobytes())
        hit = getattr(self, "_jac_cache", None)
        if hit is not None and hit[0] == key:
            return hit[1], hit[2]
        eq0, ineq0, vars, base_pack = self._residuals(x)
        packP = self._perturbation_pack(vars)
        L, h = self.layout, _FD_STEP
        Ns = self.plan.knots_per_phase

        store = {"eq": ([], [], []), "ineq": ([], [], [])}

        def add(kind, rows_slice, col_slice, mat):
            mat = np.atleast_2d(mat)
            rr, cc, vv = store[kind]
            nr = rows_slice.stop - rows_slice.start
            nc = col_slice.stop - col_slice.start
            rr.append(np.repeat(np.arange(rows_slice.start, rows_slice.stop), nc))
            cc.append(np.tile(np.arange(col_slice.start, col_slice.stop), nr))
            vv.append(np.asarray(mat, float).ravel())

        def fd_groups(b, groups, base_val):
            """Central differences of a block over cheap variable groups."""
            for col_slice, arr, idx0 in groups:
                ncols = col_slice.stop - col_slice.start
                D = np.zeros((b.dim, ncols))
                for c in range(ncols):
                    orig = arr[idx0 + c]
                    arr[idx0 + c] = orig + h
                    rp = self._eval_scalar(b, vars, base_pack)
                    arr[idx0 + c] = orig - h
                    rm = self._eval_scalar(b, vars, base_pack)
                    arr[idx0 + c] = orig
                    D[:, c] = (rp - rm) / (2 * h)
                add(b.kind, b.rows, col_slice, D)

        eye6 = np.eye(6)
        for b in self.eq_blocks + self.ineq_blocks:
            i, label = b.knot, b.label
            meta = b.meta
            k = meta.get("phase")
            dt = self.dt_of_phase(vars, k) if k is not None else None

            # --- batched FD in robot configuration (and velocity for torques)
            pack_dep = label in self._PACK_LABELS and (
                "contact" not in meta or meta["contact"].kind == "robot"
            )
            if pack_dep:
                t = i
                Ep = self._eval_rows(b, vars, packP, packP.qrows_plus[t])
                Em = self._eval_rows(b, vars, packP, packP.qrows_minus[t])
                add(b.kind, b.rows, L.q(t), ((Ep - Em) / (2 * h)).T)
                if label == "torque-limits":
                    Ep = self._eval_rows(b, vars, packP, packP.vrows_plus[t])
                    Em = self._eval_rows(b, vars, packP, packP.vrows_minus[t])
                    add(b.kind, b.rows, L.v(t), ((Ep - Em) / (2 * h)).T)

            # --- analytic pieces
            if label == "velocity-defect":
                nv = L.nv
                add("eq", b.rows, L.v(i + 1), np.eye(nv))
                add("eq", b.rows, L.v(i), -np.eye(nv))
                add("eq", b.rows, L.vdot(i), -dt * np.eye(nv))
                add("eq", b.rows, L.tbar(k), (-vars["VD"][i] / Ns)[:, None])
            elif label == "momentum-defect":
                add("eq", b.rows, L.h(i + 1), eye6)
                add("eq", b.rows, L.h(i), -eye6)
                res = eq0[b.rows]
                hdot = (vars["H"][i + 1] - vars["H"][i] - res) / dt
                add("eq", b.rows, L.tbar(k), (-hdot / Ns)[:, None])
                com = base_pack.com[base_pack.base_row[i]]
                for c in self.phase_contacts[k]:
                    if c.kind != "robot":
                        continue
                    R_j, _, _ = self._robot_contact_fixtures(c, vars, i)
                    r_e = base_pack.frames[c.attached.owner][1][base_pack.base_row[i]]
                    B = np.zeros((6, 6))
                    B[0:3, 0:3] = R_j
                    B[3:6, 0:3] = skew(r_e - com) @ R_j
                    B[3:6, 3:6] = R_j
                    add("eq", b.rows, L.wrench(c.attached.id, i), -dt * B)
                    if c.sup.owner_kind == "object":
                        sl = L.obj_pose(c.sup.owner, i)
                        fd_groups(b, [(sl, x, sl.start)], None)
            elif label == "momentum-consistency":
                add("eq", b.rows, L.h(i), eye6)
                add("eq", b.rows, L.v(i), -base_pack.A[base_pack.base_row[i]])
            elif label == "quaternion-norm":
                quat = vars["Q"][i][3:7]
                sl = L.q(i)
                add("eq", b.rows, slice(sl.start + 3, sl.start + 7), 2 * quat[None, :])
            elif label == "object-quaternion-norm":
                quat = vars["objs"][meta["obj"]]["pose"][i][3:7]
                sl = L.obj_pose(meta["obj"], i)
                add("eq", b.rows, slice(sl.start + 3, sl.start + 7), 2 * quat[None, :])
            elif label == "object-twist-defect":
                add("eq", b.rows, L.obj_twist(meta["obj"], i + 1), eye6)
                add("eq", b.rows, L.obj_twist(meta["obj"], i), -eye6)
                add("eq", b.rows, L.obj_acc(meta["obj"], i), -dt * eye6)
                acc = vars["objs"][meta["obj"]]["acc"][i]
                add("eq", b.rows, L.tbar(k), (-acc / Ns)[:, None])
            elif label == "terminal-rest":
                add("eq", b.rows, L.v(i), np.eye(L.nv))
            elif label == "object-terminal-rest":
                add("eq", b.rows, L.obj_twist(meta["obj"], i), eye6)
            elif label == "object-goal-band":
                sl = L.obj_pose(meta["obj"], i)
                cols = slice(sl.start, sl.start + 3)
                add("ineq", b.rows, cols, np.vstack([np.eye(3), -np.eye(3)]))
            elif label == "friction-cone":
                c = meta["contact"]
                lam = self._contact_wrench(c, vars, i)
                D = np.zeros((2, 6))
                D[0, 0] = 2 * lam[0]
                D[0, 1] = 2 * lam[1]
                D[0, 2] = -2 * c.mu**2 * lam[2]
                D[1, 2] = -1.0
                add("ineq", b.rows, self._wrench_slice(c, i), D)
            elif label == "cop-bounds":
                c = meta["contact"]
                ex, ey = c.attached.half_extents
                D = np.array(
                    [
                        [0, 0, -c.mu_r, 0, 0, 1],
                        [0, 0, -c.mu_r, 0, 0, -1],
                        [0, 0, -ey, 1, 0, 0],
                        [0, 0, -ey, -1, 0, 0],
                        [0, 0, -ex, 0, 1, 0],
                        [0, 0, -ex, 0, -1, 0],
                    ],
                    float,
                )
                add("ineq", b.rows, self._wrench_slice(c, i), D)
            elif label == "torque-limits":
                Ma = base_pack.M[base_pack.base_row[i]][6:, :]
                add("ineq", b.rows, L.vdot(i), np.vstack([Ma, -Ma]))
                for c in self.phase_contacts[k]:
                    if c.kind != "robot":
                        continue
                    R_j, _, _ = self._robot_contact_fixtures(c, vars, i)
                    Ja = base_pack.frames[c.attached.owner][2][base_pack.base_row[i]][:, 6:]
                    R6 = np.zeros((6, 6))
                    R6[0:3, 0:3] = R_j
                    R6[3:6, 3:6] = R_j
                    D = -(Ja.T @ R6)
                    add("ineq", b.rows, L.wrench(c.attached.id, i), np.vstack([D, -D]))
                    if c.sup.owner_kind == "object":
                        sl = L.obj_pose(c.sup.owner, i)
                        fd_groups(b, [(sl, x, sl.start)], None)
            elif label in ("contact-kinematics", "contact-closing", "limb-halfspace",
                           "patch-bounds", "patch-bounds-closing"):
                c = meta["contact"]
                if label == "contact-kinematics" and c.kind == "robot":
                    # in-plane velocity (and yaw-rate) rows are linear in v
                    R_j, _, _ = self._robot_contact_fixtures(c, vars, i)
                    J_e = base_pack.frames[c.attached.owner][2][base_pack.base_row[i]]
                    Dv = (R_j.T @ J_e[0:3, :])[0:2, :]
                    rs = b.rows
                    add("eq", slice(rs.start + 1, rs.start + 3), L.v(i), Dv)
                    if not c.is_point:
                        Dw = (R_j.T @ J_e[3:6, :])[2:3, :]
                        add("eq", slice(rs.start + 5, rs.start + 6), L.v(i), Dw)
                groups = []
                if c.kind == "object":
                    slp = L.obj_pose(c.obj_name, i)
                    slt = L.obj_twist(c.obj_name, i)
                    groups += [(slp, x, slp.start)]
                    if label == "contact-kinematics":
                        groups += [(slt, x, slt.start)]
                if c.sup.owner_kind == "object":
                    slp = L.obj_pose(c.sup.owner, i)
                    slt = L.obj_twist(c.sup.owner, i)
                    groups += [(slp, x, slp.start)]
                    if label == "contact-kinematics":
                        groups += [(slt, x, slt.start)]
                if groups:
                    self._fd_via_vars(b, vars, base_pack, groups, add)
            elif label == "config-defect":
                groups = [
                    (L.q(i), x, L.q(i).start),
                    (L.q(i + 1), x, L.q(i + 1).start),
                    (L.v(i), x, L.v(i).start),
                    (L.tbar(k), x, L.tbar(k).start),
                ]
                self._fd_via_vars(b, vars, base_pack, groups, add)
            elif label == "object-pose-defect":
                name = meta["obj"]
                groups = [
                    (L.obj_pose(name, i), x, L.obj_pose(name, i).start),
                    (L.obj_pose(name, i + 1), x, L.obj_pose(name, i + 1).start),
                    (L.obj_twist(name, i), x, L.obj_twist(name, i).start),
                    (L.tbar(k), x, L.tbar(k).start),
                ]
                self._fd_via_vars(b, vars, base_pack, groups, add)
            elif label == "object-dynamics":
                name = meta["obj"]
                obj = self.scene.object(name)
                add("eq", b.rows, L.obj_acc(name, i), -object_spatial_inertia(obj))
                groups = [
                    (L.obj_pose(name, i), x, L.obj_pose(name, i).start),
                    (L.obj_twist(name, i), x, L.obj_twist(name, i).start),
                ]
                sup = self.phase_object_support[k].get(name)
                if sup is not None:
                    groups.append((L.obj_wenv(name, i), x, L.obj_wenv(name, i).start))
                    if sup.sup.owner_kind == "object":
                        slp = L.obj_pose(sup.sup.owner, i)
                        groups.append((slp, x, slp.start))
                for c in self.phase_grasps[k][name]:
                    slw = L.wrench(c.attached.id, i)
                    groups.append((slw, x, slw.start))
                for c in self.phase_child_supports[k][name]:
                    slw = L.obj_wenv(c.obj_name, i)
                    slp = L.obj_pose(c.obj_name, i)
                    groups += [(slw, x, slw.start), (slp, x, slp.start)]
                self._fd_via_vars(b, vars, base_pack, groups, add)

        n = L.n
        Je = sp.csr_matrix(
            (np.concatenate(store["eq"][2]) if store["eq"][2] else [],
             (np.concatenate(store["eq"][0]) if store["eq"][0] else [],
              np.concatenate(store["eq"][1]) if store["eq"][1] else [])),
            shape=(self.n_eq, n),
        )
        Ji = sp.csr_matrix(
            (np.concatenate(store["ineq"][2]) if store["ineq"][2] else [],
             (np.concatenate(store["ineq"][0]) if store["ineq"][0] else [],
              np.concatenate(store["ineq"][1]) if store["ineq"][1] else [])),
            shape=(self.n_ineq, n),
        )
        self._jac_cache = (key, Je, Ji)
        return Je, Ji

    def _wrench_slice(self, c, i):
        if c.kind == "robot":
            return self.layout.wrench(c.attached.id, i)
        return self.layout.obj_wenv(c.obj_name, i)

    def _fd_via_vars(self, b, vars, base_pack, groups, add):
        """Central differences over flat-x groups, re-splitting views in place.

        `groups` entries are (col_slice, x_ref, start); perturbations are
        applied to the split arrays through the layout mapping.
        """
        h = _FD_STEP
        L = self.layout
        for col_slice, _x, start in groups:
            ncols = col_slice.stop - col_slice.start
            D = np.zeros((b.dim, ncols))
            for cidx in range(ncols):
                flat = start + cidx
                view, vidx = self._var_view(vars, flat)
                orig = view[vidx]
                view[vidx] = orig + h
                rp = self._eval_scalar(b, vars, base_pack)
                view[vidx] = orig - h
                rm = self._eval_scalar(b, vars, base_pack)
                view[vidx] = orig
                D[:, cidx] = (rp - rm) / (2 * h)
            add(b.kind, b.rows, col_slice, D)

    def _var_view(self, vars, flat):
        """Map a flat decision index to (array, local index) in the split dict."""
        L = self.layout
        if flat >= L._tbar0:
            return vars["T"], flat - L._tbar0
        if flat >= L._obj0:
            rel = flat - L._obj0
            oidx = rel // L._per_obj
            name = L.obj_names[oidx]
            rel -= oidx * L._per_obj
            ns = L.n_state * L.obj_stride_state
            if rel < ns:
                t, r = divmod(rel, L.obj_stride_state)
                if r < 7:
                    return vars["objs"][name]["pose"][t], r
                return vars["objs"][name]["twist"][t], r - 7
            rel -= ns
            t, r = divmod(rel, L.obj_stride_control)
            if r < 6:
                return vars["objs"][name]["acc"][t], r
            return vars["objs"][name]["wenv"][t], r - 6
        if flat >= L._control0:
            rel = flat - L._control0
            t, r = divmod(rel, L.control_stride)
            if r < L.nv:
                return vars["VD"][t], r
            r -= L.nv
            e, r = divmod(r, 6)
            return vars["LAM"][L.ee_ids[e]][t], r
        t, r = divmod(flat - L._state0, L.state_stride)
        if r < L.nq:
            return vars["Q"][t], r
        r -= L.nq
        if r < L.nv:
            return vars["V"][t], r
        return vars["H"][t], r - L.nv

    # ------------------------------------------------------------------
    # NLP packaging

    def nlp(self):
        return NLPProblem(
            n=self.layout.n,
            cost=self.cost,
            lb=self.lb,
            ub=self.ub,
            eq=self.eq_residual,
            ineq=self.ineq_residual,
            cost_grad=self.cost_grad,
            eq_jac=lambda x: self._jacobians(x)[0],
            ineq_jac=lambda x: self._jacobians(x)[1],
            cost_hess=self.cost_hess,
            meta={"transcription": self},
        )

    def evaluate(self, x):
        """(cost, max |equality|, max positive inequality); penalties stay in
        the cost and never enter the feasibility numbers."""
        x = np.asarray(x, float)
        eq, ineq, _, _ = self._residuals(x)
        c = self.cost(x)
        if not (np.isfinite(c) and np.all(np.isfinite(eq)) and np.all(np.isfinite(ineq))):
            raise FloatingPointError("non-finite evaluation point")
        ve = np.abs(eq).max() if eq.size else 0.0
        vi = float(np.maximum(ineq, 0.0).max()) if ineq.size else 0.0
        return float(c), float(ve), float(vi)

    def terminal_base_height(self, x):
        return float(x[self.layout.q(self.layout.n_state - 1)][2])


def transcribe(scene, sequence, plan=None, cost=None):
    """Build the NLP transcription for one symbolic contact sequence."""
    return Transcription(scene, sequence, plan=plan, cost=cost)


def evaluate(transcription, x):
    return transcription.evaluate(x)
