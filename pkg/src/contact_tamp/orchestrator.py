"""Planning loop: symbolic candidates, transcription, warm start, solve, rank.

Each tree expansion hands a full contact sequence to the trajectory
optimizer; the solve report is shaped into a [0, 1] reward that drives the
search. Results for identical sequences are cached. Candidates are ranked
either by cost among feasible solutions or by a task metric (terminal base
height), with infeasible candidates always below feasible ones.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .kinodynamics import ForwardKinematics, centroidal_momentum_matrix
from .nlp import SolverOptions, solve
from .scene import state_hash, state_key
from .se3 import quat_normalize, quat_to_rot, so3_log
from .symbolic import ContactSearch, SearchConfig, generate_skeletons, goal_pairs_for_placements
from .trajopt import CostSpec, PhasePlan, Transcription
from .trajopt.residuals import integrate_object_pose


@dataclass
class TampConfig:
    """Loop-level settings: iteration budget, reward shaping, ranking."""

    n_iterations: int = 100
    reward_violation_scale: float = 10.0  # alpha
    reward_cost_scale: float = 0.01  # beta
    ranking: str = "cost"  # cost | height
    feasibility_threshold: float = 1e-3
    parallel: int = 1

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.reward_violation_scale <= 0 or self.reward_cost_scale <= 0:
            raise ValueError("reward scales must be positive")
        if self.ranking not in ("cost", "height"):
            raise ValueError(f"unknown ranking criterion {self.ranking!r}")


@dataclass
class TaskSpec:
    """What to plan: goal contacts and/or object placements and/or objective."""

    goal_pairs: frozenset = frozenset()
    goal_placements: dict = field(default_factory=dict)
    use_skeletons: bool = True
    search: SearchConfig = field(default_factory=SearchConfig)
    plan_knots: int = 4
    t_min: float = 0.3
    t_max: float = 2.0
    cost: CostSpec = field(default_factory=CostSpec)
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class CandidateResult:
    index: int
    sequence: tuple  # tuple of state_key tuples
    skeleton: str | None
    reward: float
    report: dict
    terminal_height: float
    goal_reached: bool
    x: np.ndarray = None
    transcription: Transcription = None

    def record(self):
        out = {
            "index": self.index,
            "sequence": [list(map(list, s)) for s in self.sequence],
            "skeleton": self.skeleton,
            "reward": self.reward,
            "report": self.report,
            "terminal_height": self.terminal_height,
            "goal_reached": self.goal_reached,
        }
        return out


def reward(report, config, n_control):
    """Map a solve report to [0, 1]; monotone decreasing in violation and cost.

    reward = exp(-alpha * violation) / (1 + beta * cost / n_control);
    invalid solves score zero.
    """
    if report is None or report.get("termination") == "invalid":
        return 0.0
    viol = max(report["max_eq_violation"], report["max_ineq_violation"])
    if not np.isfinite(viol):
        return 0.0
    cost_norm = max(report["cost"], 0.0) / max(n_control, 1)
    r = float(np.exp(-config.reward_violation_scale * viol) / (1.0 + config.reward_cost_scale * cost_norm))
    return min(max(r, 0.0), 1.0)


# ---------------------------------------------------------------------------
# initial guess


def _phase_base_anchor(tr, k, prev_anchor, clearance):
    """Base (x, y, z) anchor for phase k from its robot support patches."""
    scene = tr.scene
    centers = []
    heights = []
    for c in tr.phase_contacts[k]:
        if c.kind != "robot" or c.attached.geometry != "patch":
            continue
        if c.sup.owner_kind == "env":
            p = c.sup.placement.p
        else:
            obj = scene.object(c.sup.owner)
            Ro = quat_to_rot(quat_normalize(obj.pose[3:7]))
            p = Ro @ c.sup.placement.p + obj.pose[0:3]
        heights.append(p[2])
        if c.sup.bounded:
            centers.append(p[0:2])
    if not heights:
        return None
    anchor = prev_anchor.copy()
    anchor[2] = float(np.mean(heights)) + clearance
    if centers:
        anchor[0:2] = np.mean(centers, axis=0)
    return anchor


def _resting_pose(scene, face, patch):
    """Object pose with `face` centered and aligned on `patch`."""
    if patch.owner_kind == "env":
        Rp, pp = patch.placement.R, patch.placement.p
    else:
        owner = scene.object(patch.owner)
        Ro = quat_to_rot(quat_normalize(owner.pose[3:7]))
        Rp = Ro @ patch.placement.R
        pp = Ro @ patch.placement.p + owner.pose[0:3]
    R_obj = Rp @ face.placement.R.T
    pos = pp - R_obj @ face.placement.p
    from .se3 import rot_to_quat

    return np.concatenate([pos, rot_to_quat(R_obj)])


def initialize_guess(tr):
    """Warm start: interpolated states, static wrench distribution, mid durations.

    Robot posture stays at the initial configuration while the base tracks
    per-phase support anchors; objects follow their support/grasp status with
    a lift clearance while carried; wrenches share the supported weight and
    shift each patch's center of pressure to cancel the static moment.
    """
    scene, plan, L = tr.scene, tr.plan, tr.layout
    tree = tr.tree
    K, Ns = plan.n_phases, plan.knots_per_phase
    N1 = L.n_state
    g_mag = abs(scene.gravity[2])
    x = L.zeros()

    q0 = scene.x_init.robot_q.copy()
    fk0 = ForwardKinematics(tree, q0)
    support_h = [
        (c.sup.placement.p[2] if c.sup.owner_kind == "env" else 0.0)
        for c in tr.phase_contacts[0]
        if c.kind == "robot"
    ]
    clearance = q0[2] - (float(np.mean(support_h)) if support_h else 0.0)

    # per-phase-boundary base anchors
    anchors = [q0[0:3].copy()]
    prev = q0[0:3].copy()
    for k in range(K):
        a = _phase_base_anchor(tr, k, prev, clearance)
        if a is None:
            a = prev.copy()  # flight: hold previous, solver lifts as needed
        anchors.append(a)
        prev = a

    # object anchors per phase boundary
    obj_anchor = {o.name: [scene.x_init.object_poses[o.name].copy()] for o in scene.objects}
    for k in range(K):
        for o in scene.objects:
            prev_pose = obj_anchor[o.name][-1]
            sup = tr.phase_object_support[k].get(o.name)
            grasped = bool(tr.phase_grasps[k][o.name])
            if sup is not None:
                pose = _resting_pose(scene, sup.attached, sup.sup)
                # keep initial in-plane position when resting on the same patch
                if np.allclose(pose[2], prev_pose[2], atol=1e-6) and not grasped:
                    pose = prev_pose.copy()
            elif grasped:
                pose = prev_pose.copy()
                pose[2] += 0.10  # carry clearance
            else:
                pose = prev_pose.copy()
            obj_anchor[o.name].append(pose)

    # interpolate state knots
    for i in range(N1):
        k = min(i // Ns, K - 1)
        frac = (i - k * Ns) / Ns
        q = q0.copy()
        q[0:3] = (1 - frac) * anchors[k] + frac * anchors[k + 1]
        x[L.q(i)] = q
        for o in scene.objects:
            a0, a1 = obj_anchor[o.name][k], obj_anchor[o.name][k + 1]
            pose = np.concatenate(
                [(1 - frac) * a0[0:3] + frac * a1[0:3], quat_normalize((1 - frac) * a0[3:7] + frac * a1[3:7])]
            )
            x[L.obj_pose(o.name, i)] = pose

    # velocities from local differences; accelerations from velocity differences
    x[L.tbar_all()] = 0.5 * (plan.t_min + plan.t_max)
    for i in range(N1 - 1):
        k = plan.phase_of(i)
        dt = x[L.tbar(k)][0] / Ns
        qa, qb = x[L.q(i)], x[L.q(i + 1)]
        Ra = quat_to_rot(quat_normalize(qa[3:7]))
        v = np.zeros(L.nv)
        v[0:3] = Ra.T @ (qb[0:3] - qa[0:3]) / dt
        Rb = quat_to_rot(quat_normalize(qb[3:7]))
        v[3:6] = so3_log(Ra.T @ Rb) / dt
        v[6:] = (qb[7:] - qa[7:]) / dt
        x[L.v(i)] = v
        for o in scene.objects:
            pa, pb = x[L.obj_pose(o.name, i)], x[L.obj_pose(o.name, i + 1)]
            Ra_o = quat_to_rot(quat_normalize(pa[3:7]))
            tw = np.zeros(6)
            tw[0:3] = Ra_o.T @ (pb[0:3] - pa[0:3]) / dt
            tw[3:6] = so3_log(Ra_o.T @ quat_to_rot(quat_normalize(pb[3:7]))) / dt
            x[L.obj_twist(o.name, i)] = tw
    x[L.v(0)] = scene.x_init.robot_v
    for o in scene.objects:
        x[L.obj_twist(o.name, 0)] = scene.x_init.object_twists[o.name]

    for i in range(N1):
        x[L.h(i)] = centroidal_momentum_matrix(tree, x[L.q(i)]) @ x[L.v(i)]
    for i in range(N1 - 1):
        k = plan.phase_of(i)
        dt = x[L.tbar(k)][0] / Ns
        x[L.vdot(i)] = (x[L.v(i + 1)] - x[L.v(i)]) / dt
        for o in scene.objects:
            x[L.obj_acc(o.name, i)] = (
                x[L.obj_twist(o.name, i + 1)] - x[L.obj_twist(o.name, i)]
            ) / dt

    # static wrench distribution per control knot
    vars0 = tr.split(x)
    pack0 = tr._base_pack(vars0)
    for i in range(L.n_control):
        k = plan.phase_of(i)
        supports = [c for c in tr.phase_contacts[k] if c.kind == "robot" and c.unilateral]
        carried = 0.0
        for o in scene.objects:
            if tr.phase_object_support[k].get(o.name) is None:
                carried += o.inertia.mass
            else:
                wsl = L.obj_wenv(o.name, i)
                x[wsl.start + 2] = o.inertia.mass * g_mag
        # grasped, unsupported objects hang from their grasp contacts
        for o in scene.objects:
            grasps = tr.phase_grasps[k][o.name]
            if tr.phase_object_support[k].get(o.name) is not None or not grasps:
                continue
            share = o.inertia.mass * g_mag / len(grasps)
            for c in grasps:
                R_j, _ = tr.support_world(c, vars0, min(i, N1 - 1))
                lam = np.zeros(6)
                lam[0:3] = -R_j.T @ (np.array([0.0, 0.0, share]))
                if c.unilateral:
                    lam[2] = max(share / max(c.mu, 0.1), abs(lam[2]) * 1.5 + 1.0)
                sl = L.wrench(c.attached.id, i)
                x[sl] = lam
        if supports:
            total = (tree.total_mass + carried) * g_mag
            fz = total / len(supports)
            com = pack0.com[min(i, N1 - 1)]
            moment = np.zeros(3)
            pts = []
            for c in supports:
                R_j, _ = tr.support_world(c, vars0, i)
                r_e = pack0.frames[c.attached.owner][1][min(i, N1 - 1)]
                f_w = R_j @ np.array([0.0, 0.0, fz])
                moment += np.cross(r_e - com, f_w)
                pts.append((c, R_j))
            for c, R_j in pts:
                sl = L.wrench(c.attached.id, i)
                lam = np.zeros(6)
                lam[0:3] = R_j.T @ np.array([0.0, 0.0, fz])
                if not c.is_point:
                    lam[3:6] = R_j.T @ (-moment / len(pts))
                x[sl] = lam

    return np.clip(x, tr.lb, tr.ub)


# ---------------------------------------------------------------------------
# the loop


def _sequence_key(states, skeleton_idx):
    return (skeleton_idx, tuple(state_key(s) for s in states))


class Orchestrator:
    def __init__(self, scene, task, config):
        self.scene = scene
        self.task = task
        self.config = config
        self.skeletons = []
        goal = set(task.goal_pairs)
        if task.goal_placements:
            goal |= set(goal_pairs_for_placements(scene, task.goal_placements))
            if task.use_skeletons:
                self.skeletons = generate_skeletons(
                    task.goal_placements, scene, task.search.n_pddl
                )
        self.goal = frozenset(goal)
        self.search = ContactSearch(scene, self.goal, self.skeletons, task.search)
        self.candidates = []
        self.trace = []
        self._cache = {}
        self._t_solve = 0.0

    def _solve_sequence(self, states, skeleton_idx):
        plan = PhasePlan(
            states=tuple(states),
            knots_per_phase=self.task.plan_knots,
            t_min=self.task.t_min,
            t_max=self.task.t_max,
        )
        tr = Transcription(self.scene, list(states), plan=plan, cost=self.task.cost)
        x0 = initialize_guess(tr)
        t0 = time.perf_counter()
        rep = solve(tr.nlp(), x0, self.task.solver)
        self._t_solve += time.perf_counter() - t0
        report = rep.to_dict()
        return tr, rep, report

    def _oracle(self, states, skeleton_idx, done):
        if not done or len(states) < 2:
            return 0.0, {"solved": False, "reason": "goal not reached"}
        # the full-horizon problem spans every state, the initial one included
        seq = list(states)
        key = _sequence_key(seq, skeleton_idx)
        if key in self._cache:
            idx, r = self._cache[key]
            return r, {"solved": True, "cached": True, "candidate": idx}
        try:
            tr, rep, report = self._solve_sequence(seq, skeleton_idx)
        except Exception as exc:
            self._cache[key] = (-1, 0.0)
            return 0.0, {"solved": False, "error": str(exc)}
        r = reward(report, self.config, tr.layout.n_control)
        cand = CandidateResult(
            index=len(self.candidates),
            sequence=tuple(state_key(s) for s in seq),
            skeleton=(
                self.skeletons[skeleton_idx].describe() if skeleton_idx is not None else None
            ),
            reward=r,
            report=report,
            terminal_height=tr.terminal_base_height(rep.x),
            goal_reached=True,
            x=rep.x,
            transcription=tr,
        )
        self.candidates.append(cand)
        self._cache[key] = (cand.index, r)
        return r, {"solved": True, "candidate": cand.index}

    def step(self):
        leaf, states, r, info = self.search.step(self._oracle)
        self.trace.append(
            {
                "expansion": self.search.expansions,
                "sequence": [list(map(list, state_key(s))) for s in states],
                "reward": r,
                "info": {k: v for k, v in info.items() if k != "x"},
            }
        )
        return r, info

    def ranked(self):
        feas = self.config.feasibility_threshold

        def viol(c):
            return max(c.report["max_eq_violation"], c.report["max_ineq_violation"])

        def key(c):
            feasible = viol(c) <= feas
            if self.config.ranking == "height":
                primary = -c.terminal_height if feasible else float("inf")
            else:
                primary = c.report["cost"] if feasible else float("inf")
            return (not feasible, primary, viol(c), state_hash(frozenset(c.sequence[-1])))

        return sorted(self.candidates, key=key)

    def run(self):
        t0 = time.perf_counter()
        for _ in range(self.config.n_iterations):
            self.step()
        ranked = self.ranked()
        wall = time.perf_counter() - t0
        manifest = {
            "config": {
                "n_iterations": self.config.n_iterations,
                "ranking": self.config.ranking,
                "feasibility_threshold": self.config.feasibility_threshold,
                "reward_violation_scale": self.config.reward_violation_scale,
                "reward_cost_scale": self.config.reward_cost_scale,
                "seed": self.task.search.seed,
                "k_max": self.task.search.k_max,
                "plan_knots": self.task.plan_knots,
            },
            "goal": [list(t) for t in sorted(state_key(self.goal))],
            "skeletons": [s.describe() for s in self.skeletons],
            "n_candidates": len(self.candidates),
            "candidates": [c.record() for c in self.candidates],
            "ranking": [c.index for c in ranked],
            "timing_seconds": {"total": wall, "solve": self._t_solve},
        }
        return ranked, manifest


def run(scene, task, config):
    """Plan on `scene` per `task`; returns (ranked candidates, manifest, trace)."""
    orch = Orchestrator(scene, task, config)
    ranked, manifest = orch.run()
    return ranked, manifest, orch.trace
