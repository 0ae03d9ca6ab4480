"""Phase plan, cost weights and the decision-variable layout of the NLP."""

from dataclasses import dataclass, field

import numpy as np

from ..scene import is_valid_state


class TranscriptionError(ValueError):
    """Raised when a symbolic sequence cannot be transcribed."""


@dataclass
class PhasePlan:
    """K contact phases, each with a fixed knot count and an optimized duration."""

    states: tuple  # canonical symbolic states, one per phase
    knots_per_phase: int = 8
    t_min: float = 0.3
    t_max: float = 2.0

    def __post_init__(self):
        self.states = tuple(frozenset(s) for s in self.states)
        if not self.states:
            raise TranscriptionError("plan needs at least one phase")
        if self.knots_per_phase < 1:
            raise TranscriptionError("need at least one knot per phase")
        if not (0.0 < self.t_min < self.t_max):
            raise TranscriptionError("need 0 < t_min < t_max")

    @property
    def n_phases(self):
        return len(self.states)

    @property
    def n_control(self):
        """Total control knots N; state knots number N + 1."""
        return self.n_phases * self.knots_per_phase

    def phase_of(self, control_knot):
        return control_knot // self.knots_per_phase

    def validate(self, scene):
        for k, s in enumerate(self.states):
            ok, violations = is_valid_state(s, scene)
            if not ok:
                raise TranscriptionError(f"phase {k} state invalid: {violations}")


@dataclass
class CostSpec:
    """Running, terminal and time-cost weights (all nonnegative)."""

    w_acceleration: float = 1e-3
    w_wrench: float = 1e-5
    w_velocity: float = 1e-2
    w_object_acceleration: float = 1e-3
    w_time: float = 0.1
    # terminal objective: maximize base height with this weight (0 = off)
    w_base_height: float = 0.0
    # terminal object position targets: {object: ([x, y, z], tolerance)}
    object_goals: dict = field(default_factory=dict)
    terminal_rest: bool = True
    collision_weight: float = 100.0
    collision_sharpness: float = 20.0

    def __post_init__(self):
        for name in (
            "w_acceleration",
            "w_wrench",
            "w_velocity",
            "w_object_acceleration",
            "w_time",
            "w_base_height",
            "collision_weight",
            "collision_sharpness",
        ):
            if getattr(self, name) < 0:
                raise TranscriptionError(f"{name} must be nonnegative")


class VariableLayout:
    """Flat-vector indexing for all decision variables.

    Order: per state knot (q, v, h); per control knot (vdot, one 6d wrench
    per robot interface); per object (poses, twists, accelerations,
    environment wrenches); phase durations last.
    """

    def __init__(self, scene, plan):
        self.scene = scene
        self.plan = plan
        tree = scene.tree
        self.nq, self.nv = tree.nq, tree.nv
        self.n_state = plan.n_control + 1
        self.n_control = plan.n_control
        self.ee_ids = [i.id for i in scene.robot_interfaces]
        self.obj_names = [o.name for o in scene.objects]

        self.state_stride = self.nq + self.nv + 6
        self.control_stride = self.nv + 6 * len(self.ee_ids)
        self.obj_stride_state = 13  # pose 7 + twist 6
        self.obj_stride_control = 12  # acceleration 6 + support wrench 6

        self._state0 = 0
        self._control0 = self._state0 + self.n_state * self.state_stride
        self._obj0 = self._control0 + self.n_control * self.control_stride
        per_obj = self.n_state * self.obj_stride_state + self.n_control * self.obj_stride_control
        self._tbar0 = self._obj0 + len(self.obj_names) * per_obj
        self.n = self._tbar0 + plan.n_phases
        self._per_obj = per_obj

    # robot state knots -------------------------------------------------------

    def q(self, i):
        base = self._state0 + i * self.state_stride
        return slice(base, base + self.nq)

    def v(self, i):
        base = self._state0 + i * self.state_stride + self.nq
        return slice(base, base + self.nv)

    def h(self, i):
        base = self._state0 + i * self.state_stride + self.nq + self.nv
        return slice(base, base + 6)

    # robot control knots -----------------------------------------------------

    def vdot(self, i):
        base = self._control0 + i * self.control_stride
        return slice(base, base + self.nv)

    def wrench(self, ee_id, i):
        e = self.ee_ids.index(ee_id)
        base = self._control0 + i * self.control_stride + self.nv + 6 * e
        return slice(base, base + 6)

    # objects -------------------------------------------------------------

    def _obj_base(self, name):
        return self._obj0 + self.obj_names.index(name) * self._per_obj

    def obj_pose(self, name, i):
        base = self._obj_base(name) + i * self.obj_stride_state
        return slice(base, base + 7)

    def obj_twist(self, name, i):
        base = self._obj_base(name) + i * self.obj_stride_state + 7
        return slice(base, base + 6)

    def obj_acc(self, name, i):
        base = (
            self._obj_base(name)
            + self.n_state * self.obj_stride_state
            + i * self.obj_stride_control
        )
        return slice(base, base + 6)

    def obj_wenv(self, name, i):
        base = (
            self._obj_base(name)
            + self.n_state * self.obj_stride_state
            + i * self.obj_stride_control
            + 6
        )
        return slice(base, base + 6)

    def tbar(self, k):
        return slice(self._tbar0 + k, self._tbar0 + k + 1)

    def tbar_all(self):
        return slice(self._tbar0, self._tbar0 + self.plan.n_phases)

    def zeros(self):
        return np.zeros(self.n)
