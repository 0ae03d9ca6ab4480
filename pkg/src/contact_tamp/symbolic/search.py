"""Monte-Carlo tree search over contact sequences.

Selection uses UCT with stable-hash tie-breaking; rollouts take random valid
transitions to the depth cap or the goal; the resulting full state sequence
is scored by a reward oracle (trajectory optimization in the full pipeline)
and the reward is backpropagated as both running mean and best descendant.
"""

import random
from dataclasses import dataclass, field

from ..scene import SceneError, state_hash
from .transitions import enumerate_transitions, goal_satisfied


@dataclass
class SearchConfig:
    k_max: int = 6
    n_pddl: int = 8
    uct_c: float = 1.4
    budget: int = 100
    seed: int = 0
    max_changes: int = 2

    def __post_init__(self):
        if self.k_max < 1:
            raise SceneError("k_max must be >= 1")
        if self.budget < 1:
            raise SceneError("search budget must be >= 1")


class SearchNode:
    """One symbolic state in the search tree plus its visit statistics."""

    __slots__ = (
        "state",
        "progress",
        "skeleton_idx",
        "parent",
        "action",
        "depth",
        "children",
        "untried",
        "visits",
        "total_reward",
        "best_reward",
    )

    def __init__(self, state, progress, skeleton_idx, parent=None, action=None, depth=0):
        self.state = state
        self.progress = progress
        self.skeleton_idx = skeleton_idx
        self.parent = parent
        self.action = action
        self.depth = depth
        self.children = []
        self.untried = None  # lazily filled with successor tuples
        self.visits = 0
        self.total_reward = 0.0
        self.best_reward = 0.0

    @property
    def mean_reward(self):
        return self.total_reward / self.visits if self.visits else 0.0

    def path_states(self):
        states = []
        node = self
        while node is not None:
            states.append(node.state)
            node = node.parent
        return states[::-1]


class ContactSearch:
    """Seeded MCTS over contact sequences, optionally skeleton-constrained."""

    def __init__(self, scene, goal, skeletons, config):
        self.scene = scene
        self.goal = frozenset(goal)
        self.skeletons = list(skeletons or [])
        self.config = config
        self.rng = random.Random(config.seed)
        self.root = SearchNode(scene.s_init, -1, None)
        if self.skeletons:
            # choosing a skeleton is the root's action set
            self.root.untried = [
                ("skeleton", k, scene.s_init) for k in range(len(self.skeletons))
            ]
        self.expansions = 0

    # -- goal / terminal tests ------------------------------------------------

    def sequence_done(self, state, progress, skeleton_idx):
        if skeleton_idx is not None:
            if not self.skeletons[skeleton_idx].complete(progress):
                return False
        if not self.goal:
            return False  # empty goal: only the depth cap terminates
        return goal_satisfied(state, self.goal)

    def node_terminal(self, node):
        if node.depth >= self.config.k_max:
            return True
        return self.sequence_done(node.state, node.progress, node.skeleton_idx)

    # -- expansion machinery ---------------------------------------------------

    def _successors(self, state, progress, skeleton_idx):
        skeleton = self.skeletons[skeleton_idx] if skeleton_idx is not None else None
        return enumerate_transitions(
            state,
            self.scene,
            skeleton=skeleton,
            progress=progress,
            max_changes=self.config.max_changes,
        )

    def _fill_untried(self, node):
        if node.untried is None:
            if self.node_terminal(node):
                node.untried = []
            else:
                node.untried = [
                    ("move", (action, ns, np_), None)
                    for action, ns, np_ in self._successors(
                        node.state, node.progress, node.skeleton_idx
                    )
                ]

    def _uct(self, parent, child):
        import math

        explore = self.config.uct_c * math.sqrt(
            math.log(max(parent.visits, 1)) / child.visits
        )
        return child.mean_reward + explore

    def select(self):
        node = self.root
        while True:
            self._fill_untried(node)
            if node.untried:
                return node
            if not node.children:
                return node  # terminal or dead end
            best = max(
                node.children,
                key=lambda ch: (self._uct(node, ch), -state_hash(ch.state)),
            )
            node = best

    def expand(self, node):
        if not node.untried:
            return node
        entry = node.untried.pop(0)
        if entry[0] == "skeleton":
            _, k, state = entry
            child = SearchNode(
                state, -1, k, parent=node, action=("skeleton", k), depth=node.depth
            )
        else:
            _, (action, ns, np_), _ = entry
            child = SearchNode(
                ns,
                np_,
                node.skeleton_idx,
                parent=node,
                action=action,
                depth=node.depth + 1,
            )
        node.children.append(child)
        return child

    def rollout(self, node):
        """Random valid transitions from `node`; returns the appended states."""
        state, progress, sk = node.state, node.progress, node.skeleton_idx
        depth = node.depth
        tail = []
        while depth < self.config.k_max and not self.sequence_done(state, progress, sk):
            succ = self._successors(state, progress, sk)
            if not succ:
                break
            _, state, progress = self.rng.choice(succ)
            tail.append(state)
            depth += 1
        return tail, state, progress

    def backpropagate(self, node, reward):
        while node is not None:
            node.visits += 1
            node.total_reward += reward
            node.best_reward = max(node.best_reward, reward)
            node = node.parent

    def step(self, reward_oracle):
        """One select-expand-rollout-backpropagate cycle.

        `reward_oracle(states, skeleton_idx, goal_reached)` returns
        (reward, info); oracle failures count as zero reward.
        """
        leaf = self.select()
        leaf = self.expand(leaf)
        tail, end_state, end_progress = self.rollout(leaf)
        states = leaf.path_states() + tail
        if leaf.skeleton_idx is not None and len(states) >= 2:
            states = [states[0]] + states[2:]  # drop the duplicated root state
        done = self.sequence_done(end_state, end_progress, leaf.skeleton_idx) or (
            not self.goal and len(states) - 1 >= 1
        )
        try:
            reward, info = reward_oracle(states, leaf.skeleton_idx, done)
        except Exception as exc:  # oracle failure: keep the node, zero reward
            reward, info = 0.0, {"error": str(exc)}
        reward = float(min(max(reward, 0.0), 1.0))
        self.backpropagate(leaf, reward)
        self.expansions += 1
        return leaf, states, reward, info
