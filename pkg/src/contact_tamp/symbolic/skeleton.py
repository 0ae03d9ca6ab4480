"""Object-centric manipulation skeletons.

A skeleton is an ordered sequence of grasp / lift / place / release actions
on target objects, each expanded into the contact pattern that must hold
while that action is the current one. Interfaces the skeleton does not
mention stay free for the planner to use.
"""

import itertools
from dataclasses import dataclass, field

from ..scene import ContactType, SceneError

GRASP = "grasp"
LIFT = "lift"
PLACE = "place"
RELEASE = "release"

VERB_ORDER = {GRASP: 0, LIFT: 1, PLACE: 2, RELEASE: 3}


@dataclass(frozen=True)
class SkeletonStep:
    """One high-level action with the pattern that holds while it is current."""

    verb: str
    obj: str
    required_present: frozenset  # triples (i, j, type)
    required_absent: frozenset  # unordered pairs {i, j} that must not touch

    def describe(self):
        return f"{self.verb}({self.obj})"


def _pairs_of(state):
    return {frozenset((i, j)) for i, j, _ in state}


def _matches(state, present, absent):
    if not frozenset(present) <= frozenset(state):
        return False
    pairs = _pairs_of(state)
    return all(frozenset(ab) not in pairs for ab in absent)


@dataclass(frozen=True)
class ManipulationSkeleton:
    """Ordered action steps plus the pre-pattern taken from the initial state."""

    steps: tuple
    initial_present: frozenset = frozenset()

    def __post_init__(self):
        last = {}
        for step in self.steps:
            if step.verb not in VERB_ORDER:
                raise SceneError(f"unknown skeleton verb {step.verb!r}")
            prev = last.get(step.obj, -1)
            if VERB_ORDER[step.verb] != prev + 1:
                raise SceneError(
                    f"object {step.obj!r} violates grasp<lift<place<release order"
                )
            last[step.obj] = VERB_ORDER[step.verb]

    def __len__(self):
        return len(self.steps)

    def pattern(self, progress):
        """(present, absent) pattern at a progress index; -1 is the pre-state."""
        if progress < 0:
            return self.initial_present, frozenset()
        step = self.steps[progress]
        return step.required_present, step.required_absent

    def matches(self, state, progress):
        present, absent = self.pattern(progress)
        return _matches(state, present, absent)

    def advance(self, state, progress):
        """New progress for a successor state, or None if the state is off-plan.

        Greedy: if the next step's pattern is met, progress advances.
        """
        nxt = progress + 1
        if nxt < len(self.steps) and self.matches(state, nxt):
            return nxt
        if self.matches(state, progress):
            return progress
        return None

    def complete(self, progress):
        return progress == len(self.steps) - 1

    def describe(self):
        return " > ".join(s.describe() for s in self.steps)


def _support_pair(scene, obj):
    """(face, patch, type) triple the object currently rests through."""
    faces = set(obj.support_faces)
    for i, j, th in scene.s_init:
        if i in faces or j in faces:
            return (i, j, th)
    raise SceneError(f"object {obj.name!r} has no initial support contact")


def _grasp_triples(scene, obj, binding):
    """Canonical triples for one grasp binding {ee_id: slot_id}."""
    out = set()
    for ee, slot in binding.items():
        g = next(g for g in obj.grasps if slot in g.slots)
        iface_ee = scene.interface(ee)
        iface_slot = scene.interface(slot)
        i, j = (iface_ee.id, iface_slot.id)
        # canonical order puts the robot side first (points before patches)
        if iface_ee.rank() > iface_slot.rank():
            i, j = j, i
        out.add((i, j, g.contact_type))
    return frozenset(out)


def grasp_bindings(scene, obj):
    """All injective end-effector assignments for each grasp option."""
    ee_points = [i.id for i in scene.robot_interfaces if i.geometry == "point"]
    bindings = []
    for g in obj.grasps:
        n = len(g.slots)
        for combo in itertools.permutations(ee_points, n):
            bindings.append(dict(zip(combo, g.slots)))
    return bindings


def generate_skeletons(goal_placements, scene, n_pddl):
    """Every skeleton of length <= n_pddl whose symbolic effect meets the goal.

    `goal_placements` maps object name -> target patch interface id. All
    object orderings, interleavings and admissible grasp bindings are
    produced; the result is empty when the goal is out of reach within
    n_pddl actions.
    """
    objects = [scene.object(name) for name in sorted(goal_placements)]
    if not objects:
        return []
    supports = {o.name: _support_pair(scene, o) for o in objects}
    bindings = {o.name: grasp_bindings(scene, o) for o in objects}
    for o in objects:
        if not bindings[o.name]:
            raise SceneError(f"object {o.name!r} has no grasp options")

    # per-object plan: (binding index, support face, target patch)
    skeletons = []

    def object_pattern(stages, chosen):
        present, absent = set(), set()
        for o in objects:
            stage = stages[o.name]
            face, patch, sth = supports[o.name]
            target = goal_placements[o.name]
            grasp = chosen.get(o.name)
            gtriples = (
                _grasp_triples(scene, o, grasp) if grasp is not None else frozenset()
            )
            if stage == 0:
                present.add((face, patch, sth))
            elif stage == 1:
                present |= gtriples
                present.add((face, patch, sth))
            elif stage == 2:
                present |= gtriples
                absent.add(frozenset((face, patch)))
            elif stage == 3:
                present |= gtriples
                present.add(_placed_triple(scene, face, target, sth))
            elif stage == 4:
                present.add(_placed_triple(scene, face, target, sth))
                absent |= {frozenset((i, j)) for i, j, _ in gtriples}
        return frozenset(present), frozenset(absent)

    def busy_ees(stages, chosen):
        out = set()
        for o in objects:
            if 1 <= stages[o.name] <= 3 and chosen.get(o.name):
                out.update(chosen[o.name].keys())
        return out

    def rec(stages, chosen, steps):
        if all(stages[o.name] == 4 for o in objects):
            skeletons.append(
                ManipulationSkeleton(
                    steps=tuple(steps),
                    initial_present=frozenset(
                        (supports[o.name][0], supports[o.name][1], supports[o.name][2])
                        for o in objects
                    ),
                )
            )
            return
        if len(steps) >= n_pddl:
            return
        # bound: remaining actions needed
        remaining = sum(4 - stages[o.name] for o in objects)
        if len(steps) + remaining > n_pddl:
            return
        for o in objects:
            stage = stages[o.name]
            if stage == 4:
                continue
            if stage == 0:
                taken = busy_ees(stages, chosen)
                for binding in bindings[o.name]:
                    if set(binding) & taken:
                        continue
                    stages2 = dict(stages, **{o.name: 1})
                    chosen2 = dict(chosen, **{o.name: binding})
                    present, absent = object_pattern(stages2, chosen2)
                    steps.append(SkeletonStep(GRASP, o.name, present, absent))
                    rec(stages2, chosen2, steps)
                    steps.pop()
            else:
                verb = (LIFT, PLACE, RELEASE)[stage - 1]
                stages2 = dict(stages, **{o.name: stage + 1})
                present, absent = object_pattern(stages2, chosen)
                steps.append(SkeletonStep(verb, o.name, present, absent))
                rec(stages2, chosen, steps)
                steps.pop()

    rec({o.name: 0 for o in objects}, {}, [])
    return skeletons


def _placed_triple(scene, face, target, theta):
    a, b = scene.interface(face), scene.interface(target)
    if a.rank() <= b.rank():
        return (face, target, theta)
    return (target, face, theta)


def goal_pairs_for_placements(scene, goal_placements):
    """Symbolic goal triples implied by object placements."""
    out = set()
    for name, target in goal_placements.items():
        obj = scene.object(name)
        face, _, sth = _support_pair(scene, obj)
        out.add(_placed_triple(scene, face, target, sth))
    return frozenset(out)
