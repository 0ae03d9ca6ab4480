"""Scene domain model: interfaces, contact types, objects, symbolic states.

A symbolic contact state is a frozenset of canonical triples
(i, j, contact_type) where i and j are interface ids. Canonical order puts
the attaching side first (points before patches, robot before object before
environment), so the constraint machinery can always treat `i` as the body
expressed in the frame of support `j`.
"""

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np
import yaml

from .kinodynamics import KinematicTree, SpatialInertia, tree_from_dict, tree_to_dict
from .se3 import Transform


class SceneError(ValueError):
    """Raised for malformed scenes or symbolic states."""


class ContactType(str, enum.Enum):
    POINT_UNILATERAL = "unilateral-point-patch"
    POINT_BILATERAL = "bilateral-point-patch"
    PATCH_UNILATERAL = "unilateral-patch-patch"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise SceneError(f"unknown contact type {value!r}")

    @property
    def is_point(self):
        return self in (ContactType.POINT_UNILATERAL, ContactType.POINT_BILATERAL)

    @property
    def unilateral(self):
        return self in (ContactType.POINT_UNILATERAL, ContactType.PATCH_UNILATERAL)


POINT = "point"
PATCH = "patch"

# canonical ordering rank: attaching side first
_OWNER_RANK = {"robot": 0, "object": 1, "env": 2}


@dataclass
class Interface:
    """A surface or point through which contact can happen."""

    id: str
    owner_kind: str  # robot | object | env
    owner: str | None  # robot frame name or object name; None for env
    geometry: str  # point | patch
    placement: Transform = field(default_factory=Transform.identity)
    half_extents: np.ndarray | None = None  # (2,) for bounded patches
    allowed_types: tuple = ()
    mu: float = 0.7
    mu_r: float = 0.01

    def __post_init__(self):
        if self.owner_kind not in _OWNER_RANK:
            raise SceneError(f"interface {self.id!r}: unknown owner kind {self.owner_kind!r}")
        if self.geometry not in (POINT, PATCH):
            raise SceneError(f"interface {self.id!r}: unknown geometry {self.geometry!r}")
        if self.geometry == POINT and self.owner_kind == "env":
            raise SceneError(f"interface {self.id!r}: environment interfaces must be patches")
        if self.half_extents is not None:
            self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(2)
            if np.any(self.half_extents <= 0.0):
                raise SceneError(f"interface {self.id!r}: half extents must be positive")
        self.allowed_types = tuple(ContactType.parse(t) for t in self.allowed_types)
        if self.mu <= 0.0 or self.mu_r < 0.0:
            raise SceneError(f"interface {self.id!r}: invalid friction coefficients")

    @property
    def static(self):
        return self.owner_kind == "env"

    @property
    def bounded(self):
        return self.geometry == PATCH and self.half_extents is not None

    def rank(self):
        return (0 if self.geometry == POINT else 1, _OWNER_RANK[self.owner_kind], self.id)


@dataclass
class GraspSpec:
    """One way to grasp an object: interface slots that must all be held."""

    slots: tuple
    contact_type: ContactType

    def __post_init__(self):
        self.slots = tuple(self.slots)
        self.contact_type = ContactType.parse(self.contact_type)
        if not self.slots:
            raise SceneError("grasp needs at least one interface slot")


@dataclass
class ObjectModel:
    """Movable rigid box with owned contact interfaces."""

    name: str
    inertia: SpatialInertia
    half_sizes: np.ndarray
    pose: np.ndarray  # (7,) position + quaternion, world
    twist: np.ndarray  # (6,) (linear, angular) in the body frame
    interfaces: list = field(default_factory=list)
    grasps: list = field(default_factory=list)
    support_faces: tuple = ()

    def __post_init__(self):
        self.half_sizes = np.asarray(self.half_sizes, dtype=float).reshape(3)
        if np.any(self.half_sizes <= 0.0):
            raise SceneError(f"object {self.name!r}: half sizes must be positive")
        self.pose = np.asarray(self.pose, dtype=float).reshape(7)
        self.twist = np.asarray(self.twist, dtype=float).reshape(6)
        self.support_faces = tuple(self.support_faces)


def canonical_pair(registry, i, j, theta):
    """Order one raw contact triple canonically."""
    if i == j:
        raise SceneError(f"contact pair between interface {i!r} and itself")
    if i not in registry or j not in registry:
        missing = i if i not in registry else j
        raise SceneError(f"unknown interface {missing!r}")
    theta = ContactType.parse(theta)
    a, b = registry[i], registry[j]
    if a.rank() <= b.rank():
        return (a.id, b.id, theta)
    return (b.id, a.id, theta)


def canonicalize(pairs, registry):
    """Canonical symbolic state from raw (i, j, type) triples.

    Symmetric duplicates merge; conflicting types for one unordered pair and
    self-pairs are rejected.
    """
    out = {}
    for i, j, theta in pairs:
        key_i, key_j, th = canonical_pair(registry, i, j, theta)
        key = (key_i, key_j)
        if key in out and out[key] != th:
            raise SceneError(
                f"conflicting contact types for pair ({key_i}, {key_j}): "
                f"{out[key].value} vs {th.value}"
            )
        out[key] = th
    return frozenset((i, j, th) for (i, j), th in out.items())


def state_key(state):
    """Deterministic sorted representation of a symbolic state."""
    return tuple(sorted((i, j, th.value) for i, j, th in state))


def state_hash(state):
    """Stable (cross-process) integer hash of a symbolic state."""
    payload = repr(state_key(state)).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def format_state(state):
    if not state:
        return "{}"
    return "{" + ", ".join(f"{i}-{j}:{th.value.split('-')[0]}" for i, j, th in state_key_triples(state)) + "}"


def state_key_triples(state):
    return sorted(state, key=lambda t: (t[0], t[1]))


def partners(state, iface):
    """Interfaces currently in contact with `iface`."""
    out = set()
    for i, j, _ in state:
        if i == iface:
            out.add(j)
        elif j == iface:
            out.add(i)
    return out


@dataclass
class ContinuousState:
    """Initial continuous state of robot and objects."""

    robot_q: np.ndarray
    robot_v: np.ndarray
    object_poses: dict = field(default_factory=dict)
    object_twists: dict = field(default_factory=dict)


@dataclass
class SceneDescription:
    """Robot, objects, environment patches and the initial contact state."""

    tree: KinematicTree
    robot_interfaces: list
    objects: list
    env_interfaces: list
    s_init: frozenset
    x_init: ContinuousState
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    collision_boxes: list = field(default_factory=list)  # robot frame boxes
    collision_pairs: list = field(default_factory=list)
    env_boxes: list = field(default_factory=list)

    def __post_init__(self):
        self.registry = {}
        for iface in self.robot_interfaces + self.env_interfaces:
            self._register(iface)
        for obj in self.objects:
            for iface in obj.interfaces:
                self._register(iface)
        for iface in self.robot_interfaces:
            if iface.owner not in self.tree.frames:
                raise SceneError(
                    f"robot interface {iface.id!r} references unknown frame {iface.owner!r}"
                )
        ok, violations = is_valid_state(self.s_init, self)
        if not ok:
            raise SceneError(f"initial symbolic state invalid: {violations}")

    def _register(self, iface):
        if iface.id in self.registry:
            raise SceneError(f"duplicate interface id {iface.id!r}")
        self.registry[iface.id] = iface

    def object(self, name):
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise SceneError(f"unknown object {name!r}")

    def interface(self, iface_id):
        try:
            return self.registry[iface_id]
        except KeyError:
            raise SceneError(f"unknown interface {iface_id!r}") from None

    def interface_ids(self):
        return sorted(self.registry)


def is_valid_state(state, scene):
    """Check all symbolic-state invariants; returns (ok, violations)."""
    violations = []
    seen_pairs = set()
    robot_contact_count = {}
    for i, j, theta in state:
        try:
            ci, cj, cth = canonical_pair(scene.registry, i, j, theta)
        except SceneError as exc:
            violations.append(str(exc))
            continue
        if (ci, cj) != (i, j) or cth != theta:
            violations.append(f"pair ({i}, {j}) is not in canonical order")
            continue
        if (ci, cj) in seen_pairs:
            violations.append(f"duplicate pair ({ci}, {cj})")
        seen_pairs.add((ci, cj))
        a, b = scene.registry[i], scene.registry[j]
        if a.static and b.static:
            violations.append(f"static-static contact ({i}, {j})")
        if theta not in a.allowed_types or theta not in b.allowed_types:
            violations.append(f"type {theta.value} not allowed for pair ({i}, {j})")
        if theta.is_point:
            if a.geometry != POINT or b.geometry != PATCH:
                violations.append(f"pair ({i}, {j}) is not point-on-patch")
        else:
            if a.geometry != PATCH or b.geometry != PATCH:
                violations.append(f"pair ({i}, {j}) is not patch-on-patch")
        for iface in (a, b):
            if iface.owner_kind == "robot":
                robot_contact_count[iface.id] = robot_contact_count.get(iface.id, 0) + 1
    for iface_id, count in robot_contact_count.items():
        if count > 1:
            violations.append(f"end-effector {iface_id} in {count} simultaneous contacts")
    return (not violations), violations


# ---------------------------------------------------------------------------
# scene file schema


def _require_keys(node, allowed, where):
    extra = set(node) - set(allowed)
    if extra:
        raise SceneError(f"unknown fields {sorted(extra)} in {where}")


def _parse_pose(node):
    pos = np.asarray(node.get("xyz", [0, 0, 0]), dtype=float)
    if "quat" in node:
        quat = np.asarray(node["quat"], dtype=float)
        return Transform.from_quat_pos(quat / np.linalg.norm(quat), pos)
    rpy = np.asarray(node.get("rpy", [0, 0, 0]), dtype=float)
    return Transform.from_rpy_pos(rpy, pos)


def _parse_interface(node, owner_kind, owner, where):
    _require_keys(
        node,
        ["id", "geometry", "xyz", "rpy", "quat", "half_extents", "allowed_types", "mu", "mu_r"],
        where,
    )
    return Interface(
        id=node["id"],
        owner_kind=owner_kind,
        owner=owner,
        geometry=node.get("geometry", PATCH),
        placement=_parse_pose(node),
        half_extents=node.get("half_extents"),
        allowed_types=node.get("allowed_types", ()),
        mu=float(node.get("mu", 0.7)),
        mu_r=float(node.get("mu_r", 0.01)),
    )


def scene_from_dict(doc, base_dir=None):
    _require_keys(
        doc,
        [
            "schema_version",
            "gravity",
            "robot",
            "robot_interfaces",
            "objects",
            "environment",
            "initial_contacts",
            "initial_state",
            "collision_boxes",
            "collision_pairs",
        ],
        "scene",
    )
    if int(doc.get("schema_version", 1)) != 1:
        raise SceneError("unsupported scene schema_version")

    robot_node = doc["robot"]
    if isinstance(robot_node, str):
        import os

        path = robot_node if base_dir is None else os.path.join(base_dir, robot_node)
        with open(path) as fh:
            robot_node = yaml.safe_load(fh)
    tree = tree_from_dict(robot_node)

    # `frame` names the owner of a robot interface; split it out before parsing
    robot_ifaces = []
    for n in doc.get("robot_interfaces", []):
        node = dict(n)
        frame = node.pop("frame", None)
        if frame is None:
            raise SceneError(f"robot interface {node.get('id')!r} needs a frame")
        robot_ifaces.append(
            _parse_interface(node, "robot", frame, f"robot interface {node.get('id')}")
        )

    objects = []
    for n in doc.get("objects", []):
        _require_keys(
            n,
            [
                "name",
                "mass",
                "com",
                "inertia",
                "half_sizes",
                "xyz",
                "rpy",
                "quat",
                "twist",
                "interfaces",
                "grasps",
                "support_faces",
                "mu",
                "mu_r",
            ],
            f"object {n.get('name')}",
        )
        name = n["name"]
        mass = float(n["mass"])
        if "inertia" in n:
            inertia = SpatialInertia(mass, n.get("com", [0, 0, 0]), np.asarray(n["inertia"]))
        else:
            inertia = SpatialInertia.uniform_box(mass, n["half_sizes"], n.get("com", [0, 0, 0]))
        pose_tf = _parse_pose(n)
        ifaces = []
        for inode in n.get("interfaces", []):
            node = dict(inode)
            node.setdefault("mu", n.get("mu", 0.7))
            node.setdefault("mu_r", n.get("mu_r", 0.01))
            ifaces.append(
                _parse_interface(node, "object", name, f"interface of object {name}")
            )
        grasps = [
            GraspSpec(g["slots"], g["type"])
            for g in n.get("grasps", [])
        ]
        objects.append(
            ObjectModel(
                name=name,
                inertia=inertia,
                half_sizes=n["half_sizes"],
                pose=np.concatenate([pose_tf.p, pose_tf.quat()]),
                twist=np.asarray(n.get("twist", np.zeros(6)), dtype=float),
                interfaces=ifaces,
                grasps=grasps,
                support_faces=n.get("support_faces", ()),
            )
        )

    env_node = doc.get("environment", {})
    _require_keys(env_node, ["patches", "boxes"], "environment")
    env_ifaces = [
        _parse_interface(n, "env", None, f"environment patch {n.get('id')}")
        for n in env_node.get("patches", [])
    ]
    env_boxes = []
    for n in env_node.get("boxes", []):
        _require_keys(n, ["id", "xyz", "rpy", "quat", "half_sizes"], "environment box")
        env_boxes.append(
            {
                "id": n["id"],
                "placement": _parse_pose(n),
                "half_sizes": np.asarray(n["half_sizes"], dtype=float),
            }
        )

    init_node = doc.get("initial_state", {})
    _require_keys(init_node, ["robot_q", "robot_v"], "initial_state")
    nq, nv = tree.nq, tree.nv
    robot_q = np.asarray(init_node.get("robot_q", tree.neutral_configuration()), dtype=float)
    robot_v = np.asarray(init_node.get("robot_v", np.zeros(nv)), dtype=float)
    if robot_q.shape != (nq,) or robot_v.shape != (nv,):
        raise SceneError("initial robot state has wrong dimensions")
    x_init = ContinuousState(
        robot_q=robot_q,
        robot_v=robot_v,
        object_poses={o.name: o.pose.copy() for o in objects},
        object_twists={o.name: o.twist.copy() for o in objects},
    )

    registry = {}
    for iface in robot_ifaces + env_ifaces:
        registry[iface.id] = iface
    for obj in objects:
        for iface in obj.interfaces:
            registry[iface.id] = iface
    s_init = canonicalize(
        [(p[0], p[1], p[2]) for p in doc.get("initial_contacts", [])], registry
    )

    collision_boxes = []
    for n in doc.get("collision_boxes", []):
        _require_keys(n, ["frame", "half_sizes", "xyz", "rpy"], "collision box")
        collision_boxes.append(
            {
                "frame": n["frame"],
                "half_sizes": np.asarray(n["half_sizes"], dtype=float),
                "placement": _parse_pose({k: n[k] for k in ("xyz", "rpy") if k in n}),
            }
        )

    gravity = np.asarray(doc.get("gravity", [0.0, 0.0, -9.81]), dtype=float)
    return SceneDescription(
        tree=tree,
        robot_interfaces=robot_ifaces,
        objects=objects,
        env_interfaces=env_ifaces,
        s_init=s_init,
        x_init=x_init,
        gravity=gravity,
        collision_boxes=collision_boxes,
        collision_pairs=[tuple(p) for p in doc.get("collision_pairs", [])],
        env_boxes=env_boxes,
    )


def load_scene(path):
    import os

    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return scene_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def scene_to_dict(scene):
    """Serialize a scene back to its file form (round-trip capable)."""

    def iface_dict(iface, with_frame=False):
        node = {
            "id": iface.id,
            "geometry": iface.geometry,
            "xyz": iface.placement.p.tolist(),
            "quat": iface.placement.quat().tolist(),
            "allowed_types": [t.value for t in iface.allowed_types],
            "mu": float(iface.mu),
            "mu_r": float(iface.mu_r),
        }
        if iface.half_extents is not None:
            node["half_extents"] = iface.half_extents.tolist()
        if with_frame:
            node["frame"] = iface.owner
        return node

    return {
        "schema_version": 1,
        "gravity": scene.gravity.tolist(),
        "robot": tree_to_dict(scene.tree),
        "robot_interfaces": [iface_dict(i, with_frame=True) for i in scene.robot_interfaces],
        "objects": [
            {
                "name": o.name,
                "mass": float(o.inertia.mass),
                "com": o.inertia.com.tolist(),
                "inertia": o.inertia.inertia.tolist(),
                "half_sizes": o.half_sizes.tolist(),
                "xyz": o.pose[:3].tolist(),
                "quat": o.pose[3:7].tolist(),
                "twist": o.twist.tolist(),
                "interfaces": [iface_dict(i) for i in o.interfaces],
                "grasps": [
                    {"slots": list(g.slots), "type": g.contact_type.value} for g in o.grasps
                ],
                "support_faces": list(o.support_faces),
            }
            for o in scene.objects
        ],
        "environment": {
            "patches": [iface_dict(i) for i in scene.env_interfaces],
            "boxes": [
                {
                    "id": b["id"],
                    "xyz": b["placement"].p.tolist(),
                    "quat": b["placement"].quat().tolist(),
                    "half_sizes": b["half_sizes"].tolist(),
                }
                for b in scene.env_boxes
            ],
        },
        "initial_contacts": [[i, j, th.value] for i, j, th in state_key_triples(scene.s_init)],
        "initial_state": {
            "robot_q": scene.x_init.robot_q.tolist(),
            "robot_v": scene.x_init.robot_v.tolist(),
        },
        "collision_boxes": [
            {
                "frame": b["frame"],
                "half_sizes": b["half_sizes"].tolist(),
                "xyz": b["placement"].p.tolist(),
                "rpy": [0.0, 0.0, 0.0],
            }
            for b in scene.collision_boxes
        ],
        "collision_pairs": [list(p) for p in scene.collision_pairs],
    }


def save_scene(scene, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scene_to_dict(scene), fh, sort_keys=False)
