"""Contact-transition enumeration with pruning.

Successor states of a symbolic contact state are built by making/breaking at
most `max_changes` interface pairs at once. Pruning removes invalid states
(same-interface, static-static, disallowed types, busy end-effectors) and
transitions where an interface swaps partners without an intervening break.
"""

import itertools
from dataclasses import dataclass

from ..scene import (
    ContactType,
    POINT,
    PATCH,
    SceneError,
    canonical_pair,
    is_valid_state,
    state_hash,
)


@dataclass(frozen=True)
class SymbolicAction:
    """Atomic contact-mode change: pairs made and pairs broken together."""

    makes: frozenset
    breaks: frozenset

    def __post_init__(self):
        if not self.makes and not self.breaks:
            raise SceneError("action must change at least one pair")
        made = {(i, j) for i, j, _ in self.makes}
        broken = {(i, j) for i, j, _ in self.breaks}
        if made & broken:
            raise SceneError("action makes and breaks the same pair")

    def apply(self, state):
        return frozenset((state - self.breaks) | self.makes)

    def describe(self):
        parts = [f"+{i}~{j}" for i, j, _ in sorted(self.makes)]
        parts += [f"-{i}~{j}" for i, j, _ in sorted(self.breaks)]
        return " ".join(parts)


def candidate_pairs(scene):
    """All canonical triples that could ever be part of a valid state."""
    ids = scene.interface_ids()
    out = []
    for a_id, b_id in itertools.combinations(ids, 2):
        a, b = scene.registry[a_id], scene.registry[b_id]
        if a.static and b.static:
            continue
        for theta in set(a.allowed_types) & set(b.allowed_types):
            geoms = {a.geometry, b.geometry}
            if theta.is_point and geoms != {POINT, PATCH}:
                continue
            if not theta.is_point and geoms != {PATCH}:
                continue
            out.append(canonical_pair(scene.registry, a_id, b_id, theta))
    return sorted(set(out))


def _partner_swap(breaks, makes):
    """True if some interface loses one partner and gains another at once."""
    lost = set()
    for i, j, _ in breaks:
        lost.update((i, j))
    for i, j, _ in makes:
        if i in lost or j in lost:
            return True
    return False


def enumerate_transitions(state, scene, skeleton=None, progress=0, max_changes=2):
    """All pruned successors of `state`.

    Returns a list of (SymbolicAction, new_state, new_progress) sorted by the
    successor's stable hash. When a skeleton is given, successors must match
    the contact pattern of skeleton step `progress` or `progress + 1` (the
    latter advances progress).
    """
    ok, violations = is_valid_state(state, scene)
    if not ok:
        raise SceneError(f"cannot expand invalid state: {violations}")

    current = sorted(state)
    available = [p for p in candidate_pairs(scene) if p not in state]
    results = []
    seen = set()
    for n_break in range(0, max_changes + 1):
        for breaks in itertools.combinations(current, n_break):
            for n_make in range(0, max_changes + 1 - n_break):
                if n_break + n_make == 0:
                    continue
                for makes in itertools.combinations(available, n_make):
                    if _partner_swap(breaks, makes):
                        continue
                    action = SymbolicAction(frozenset(makes), frozenset(breaks))
                    new_state = action.apply(state)
                    if new_state == state or new_state in seen:
                        continue
                    valid, _ = is_valid_state(new_state, scene)
                    if not valid:
                        continue
                    if skeleton is not None:
                        new_progress = skeleton.advance(new_state, progress)
                        if new_progress is None:
                            continue
                    else:
                        new_progress = progress
                    seen.add(new_state)
                    results.append((action, new_state, new_progress))
    results.sort(key=lambda r: state_hash(r[1]))
    return results


def goal_satisfied(state, goal):
    """Subset test: every goal triple is active in `state`."""
    return frozenset(goal) <= frozenset(state)
