"""Floating-base kinematic tree model and its file loader."""

from dataclasses import dataclass, field

import numpy as np
import yaml

from ..se3 import Transform

FLOATING = "floating"
REVOLUTE = "revolute"
PRISMATIC = "prismatic"

JOINT_KINDS = (FLOATING, REVOLUTE, PRISMATIC)


class ModelError(ValueError):
    """Raised for structurally invalid robot models."""


@dataclass
class SpatialInertia:
    """Mass, center-of-mass offset and rotational inertia in a body frame."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        self.com = np.asarray(self.com, dtype=float).reshape(3)
        self.inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        if self.mass <= 0.0:
            raise ModelError(f"mass must be positive, got {self.mass}")
        if np.linalg.norm(self.inertia - self.inertia.T, np.inf) > 1e-9:
            raise ModelError("rotational inertia must be symmetric")
        eigs = np.linalg.eigvalsh(self.inertia)
        if np.min(eigs) <= 0.0:
            raise ModelError("rotational inertia must be positive definite")
        a, b, c = np.sort(np.linalg.eigvalsh(self.inertia))
        if a + b < c * (1.0 - 1e-9):
            raise ModelError("principal moments violate the triangle inequality")

    @classmethod
    def uniform_box(cls, mass, half_sizes, com=(0.0, 0.0, 0.0)):
        hx, hy, hz = half_sizes
        ix = mass / 3.0 * (hy**2 + hz**2)
        iy = mass / 3.0 * (hx**2 + hz**2)
        iz = mass / 3.0 * (hx**2 + hy**2)
        return cls(mass, np.asarray(com, dtype=float), np.diag([ix, iy, iz]))


@dataclass
class Joint:
    """One joint and the body rigidly attached to its outboard frame."""

    name: str
    kind: str
    parent: int  # index of parent joint, -1 for the world
    placement: Transform  # joint frame in the parent body frame
    axis: np.ndarray | None = None  # motion axis, local frame (revolute/prismatic)

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ModelError(f"unknown joint kind {self.kind!r}")
        if self.kind == FLOATING:
            self.axis = None
        else:
            if self.axis is None:
                raise ModelError(f"joint {self.name!r} needs a motion axis")
            a = np.asarray(self.axis, dtype=float).reshape(3)
            n = np.linalg.norm(a)
            if abs(n - 1.0) > 1e-6:
                raise ModelError(f"joint {self.name!r} axis must be a unit vector")
            self.axis = a / n


@dataclass
class Frame:
    """Named frame rigidly attached to a body (end-effector attachment)."""

    name: str
    body: int
    placement: Transform


@dataclass
class KinematicTree:
    """Floating-base rigid-body tree.

    Joint 0 is the floating base; bodies are indexed like their joints and the
    parent index of every joint is strictly smaller than its own.
    """

    joints: list
    inertias: list
    tau_min: np.ndarray
    tau_max: np.ndarray
    frames: dict = field(default_factory=dict)
    name: str = "robot"

    def __post_init__(self):
        if not self.joints:
            raise ModelError("tree needs at least the floating base")
        if self.joints[0].kind != FLOATING or self.joints[0].parent != -1:
            raise ModelError("joint 0 must be a floating base rooted at the world")
        for i, j in enumerate(self.joints[1:], start=1):
            if j.kind == FLOATING:
                raise ModelError("exactly one floating-base joint is allowed")
            if not (-1 <= j.parent < i):
                raise ModelError(f"joint {j.name!r} breaks topological order")
        if len(self.inertias) != len(self.joints):
            raise ModelError("need one spatial inertia per joint")
        self.tau_min = np.asarray(self.tau_min, dtype=float).reshape(self.n_joints)
        self.tau_max = np.asarray(self.tau_max, dtype=float).reshape(self.n_joints)
        if np.any(self.tau_min > self.tau_max):
            raise ModelError("torque limits must satisfy tau_min <= tau_max")

    @property
    def n_bodies(self):
        return len(self.joints)

    @property
    def n_joints(self):
        """Number of actuated (1-dof) joints."""
        return len(self.joints) - 1

    @property
    def nq(self):
        return 7 + self.n_joints

    @property
    def nv(self):
        return 6 + self.n_joints

    @property
    def total_mass(self):
        return float(sum(si.mass for si in self.inertias))

    def frame_names(self):
        return list(self.frames)

    def neutral_configuration(self):
        q = np.zeros(self.nq)
        q[6] = 1.0  # unit quaternion, scalar last
        return q

    def check_configuration(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.nq,):
            raise ModelError(f"configuration must have shape ({self.nq},), got {q.shape}")
        return q

    def check_velocity(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.nv,):
            raise ModelError(f"velocity must have shape ({self.nv},), got {v.shape}")
        return v


@dataclass
class RobotState:
    """Configuration, tangent velocity and centroidal momentum.

    q = [base position, base quaternion (x, y, z, w), joint positions]
    v = [base linear, base angular (both in the base frame), joint rates]
    h = (linear, angular) momentum about the instantaneous center of mass,
        world-aligned axes.
    """

    q: np.ndarray
    v: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.h = np.asarray(self.h, dtype=float).reshape(6)
        if abs(np.linalg.norm(self.q[3:7]) - 1.0) > 1e-9:
            raise ModelError("base quaternion must be unit norm")
        if self.v.shape[0] != self.q.shape[0] - 1:
            raise ModelError("velocity dimension must be 6 + n_joints")
        if not np.all(np.isfinite(self.h)):
            raise ModelError("momentum must be finite")


def _parse_transform(node):
    xyz = np.asarray(node.get("xyz", [0.0, 0.0, 0.0]), dtype=float)
    rpy = np.asarray(node.get("rpy", [0.0, 0.0, 0.0]), dtype=float)
    extra = set(node) - {"xyz", "rpy"}
    if extra:
        raise ModelError(f"unknown transform fields {sorted(extra)}")
    return Transform.from_rpy_pos(rpy, xyz)


def _parse_inertia(node):
    allowed = {"mass", "com", "inertia", "box"}
    extra = set(node) - allowed
    if extra:
        raise ModelError(f"unknown inertia fields {sorted(extra)}")
    mass = float(node["mass"])
    com = node.get("com", [0.0, 0.0, 0.0])
    if "box" in node:
        return SpatialInertia.uniform_box(mass, node["box"], com)
    inertia = np.asarray(node["inertia"], dtype=float)
    if inertia.shape == (6,):  # [ixx iyy izz ixy ixz iyz]
        ixx, iyy, izz, ixy, ixz, iyz = inertia
        inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    return SpatialInertia(mass, com, inertia)


def tree_from_dict(doc):
    """Build a validated KinematicTree from the robot-file dictionary."""
    allowed = {"schema_version", "name", "joints", "frames"}
    extra = set(doc) - allowed
    if extra:
        raise ModelError(f"unknown robot-file fields {sorted(extra)}")
    if int(doc.get("schema_version", 1)) != 1:
        raise ModelError("unsupported robot schema_version")

    joints, inertias = [], []
    tau_min, tau_max = [], []
    index = {}
    for node in doc["joints"]:
        allowed = {"name", "kind", "parent", "origin", "axis", "body",
                   "torque_min", "torque_max"}
        extra = set(node) - allowed
        if extra:
            raise ModelError(f"unknown joint fields {sorted(extra)}")
        name = node["name"]
        if name in index:
            raise ModelError(f"duplicate joint name {name!r}")
        parent_name = node.get("parent", "world")
        if parent_name == "world":
            parent = -1
        elif parent_name in index:
            parent = index[parent_name]
        else:
            raise ModelError(f"joint {name!r} references unknown parent {parent_name!r}")
        kind = node["kind"]
        joint = Joint(
            name=name,
            kind=kind,
            parent=parent,
            placement=_parse_transform(node.get("origin", {})),
            axis=node.get("axis"),
        )
        index[name] = len(joints)
        joints.append(joint)
        inertias.append(_parse_inertia(node["body"]))
        if kind != FLOATING:
            tau_min.append(float(node.get("torque_min", -np.inf)))
            tau_max.append(float(node.get("torque_max", np.inf)))

    frames = {}
    for fname, fnode in (doc.get("frames") or {}).items():
        allowed = {"joint", "xyz", "rpy"}
        extra = set(fnode) - allowed
        if extra:
            raise ModelError(f"unknown frame fields {sorted(extra)}")
        body_name = fnode["joint"]
        if body_name not in index:
            raise ModelError(f"frame {fname!r} references unknown joint {body_name!r}")
        placement = _parse_transform({k: v for k, v in fnode.items() if k != "joint"})
        frames[fname] = Frame(fname, index[body_name], placement)

    return KinematicTree(
        joints=joints,
        inertias=inertias,
        tau_min=np.asarray(tau_min),
        tau_max=np.asarray(tau_max),
        frames=frames,
        name=doc.get("name", "robot"),
    )


def load_tree(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return tree_from_dict(doc)


def tree_to_dict(tree):
    """Inverse of tree_from_dict (used for round-trip saves)."""
    joints = []
    k = 0
    for i, (j, si) in enumerate(zip(tree.joints, tree.inertias)):
        node = {
            "name": j.name,
            "kind": j.kind,
            "parent": "world" if j.parent < 0 else tree.joints[j.parent].name,
            "origin": {
                "xyz": j.placement.p.tolist(),
                "rpy": _rot_to_rpy(j.placement.R),
            },
            "body": {
                "mass": float(si.mass),
                "com": si.com.tolist(),
                "inertia": si.inertia.tolist(),
            },
        }
        if j.kind != FLOATING:
            node["axis"] = j.axis.tolist()
            node["torque_min"] = float(tree.tau_min[k])
            node["torque_max"] = float(tree.tau_max[k])
            k += 1
        joints.append(node)
    frames = {
        f.name: {
            "joint": tree.joints[f.body].name,
            "xyz": f.placement.p.tolist(),
            "rpy": _rot_to_rpy(f.placement.R),
        }
        for f in tree.frames.values()
    }
    return {"schema_version": 1, "name": tree.name, "joints": joints, "frames": frames}


def _rot_to_rpy(R):
    sy = -R[2, 0]
    sy = np.clip(sy, -1.0, 1.0)
    p = np.arcsin(sy)
    if abs(abs(sy) - 1.0) < 1e-12:
        r = np.arctan2(-R[0, 1], R[1, 1])
        y = 0.0
    else:
        r = np.arctan2(R[2, 1], R[2, 2])
        y = np.arctan2(R[1, 0], R[0, 0])
    return [float(r), float(p), float(y)]
