"""Finite two-player safety game over the learned driver abstraction.

The arena is the reachable synchronous product of driver abstraction, lead
and follower kinematics, sensor perturbation, step scheduling, and the
three-mode control skeleton.  Each 0.5 s decision epoch unfolds as one
environment move (sensor level choice plus the deterministic driver
response) followed by one controller move (pick an action; physics then
advances deterministically).

Positions and velocities are held on an exact lattice (0.25 m, 0.5 m/s
units) so that the gridded game dynamics coincide bit-for-bit with the
continuous simulation.  The objective is the weak-until condition: never
overtake the lead unless the destination has been reached first.

State encoding.  Environment turn: `(0, k, fpos, fvel, hm, hinted)`;
controller turn: `(1, k, fpos, fvel, hm, driver_acc)` with positions and
velocities in lattice units.  The supervision mode and the perceived level
are deliberately not part of the state: both are functions of the incoming
edge (mode follows the chosen action one-to-one, the perceived level is
subsumed by the driver successor and its emitted acceleration), so folding
them out is a bisimulation quotient that leaves the winning region and all
checked properties unchanged while keeping the product tractable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .driver import DriverParams, decide_acceleration, FULL_CHAIN
from .mealy import AlphabetMismatch
from .supervisor import (
    ACTION_HINT,
    ACTION_MODE,
    ACTION_NONE,
    ACTION_OVERRIDE,
    ACTIONS,
    arbitrate,
    risk_warn,
    safe_now,
)
from .world import headway_metrics, quantize_thw, sensor_perturb

TURN_ENV = 0
TURN_CTRL = 1

POS_SCALE = 4   # lattice units per metre
VEL_SCALE = 2   # lattice units per (m/s)

VARIANT_ACTIONS = {
    "full": (ACTION_NONE, ACTION_HINT, ACTION_OVERRIDE),
    "no-override": (ACTION_NONE, ACTION_HINT),
    "advisory-only": (ACTION_HINT,),
}

ACTION_SEVERITY = {ACTION_NONE: 0, ACTION_HINT: 1, ACTION_OVERRIDE: 2}


class ArenaCapExceeded(RuntimeError):
    """Reachable product grew past the configured state cap."""


class Unrealizable(RuntimeError):
    """Strategy extraction requested although the initial state is losing."""


def _scaled(value, scale, what):
    q = round(value * scale)
    if not math.isclose(q, value * scale, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"{what} {value!r} is not on the arena lattice")
    return q


class AbstractDriver:
    """Driver dimension of the game: abstraction states plus a hint flag.

    Normal moves follow the learned machine.  After a hint the next repeated
    stimulus re-deliberates instead of replaying the cached decision: the
    response is recomputed with the acceleration law at the level's
    representative headway, and the successor is resolved through the
    (level, acc) state annotations recovered from incoming edges.
    """

    def __init__(self, hm, params):
        self.hm = hm
        self.params = params
        self._annotation = {}
        self._by_profile = {}
        for state in hm.reachable_states():
            for level in hm.inputs:
                succ, (_chain, acc) = hm.delta[state][level]
                if succ not in self._annotation:
                    self._annotation[succ] = (level, acc)
                    self._by_profile.setdefault((level, acc), succ)
        self._memo = {}

    def step(self, state, hinted, level):
        """Returns (successor, driver_acc, full_deliberation)."""
        key = (state, hinted, level)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        succ, (chain, acc) = self.hm.step(state, level)
        if not hinted or chain == FULL_CHAIN:
            result = (succ, acc, chain == FULL_CHAIN)
        else:
            # hinted repeated stimulus: re-deliberate at the same headway
            rep = self.params.representative(level)
            acc2 = decide_acceleration(rep, rep, self.params.decision_epoch,
                                       self.params, acc)
            succ2 = self._by_profile.get((level, acc2), succ)
            result = (succ2, acc2, True)
        self._memo[key] = result
        return result


class GameArena:
    """Explicit bipartite arena: interleaved controller/environment turns.

    States are opaque tuples; `turn[i]` says who moves, `edges[i]` lists
    `(label, successor)` pairs.  Environment edges are uncontrollable
    (sensor level choices); controller edges carry supervision actions.
    """

    def __init__(self, states, index, turn, edges, bad, goal, terminal,
                 initial, meta=None):
        self.states = states
        self.index = index
        self.turn = turn
        self.edges = edges
        self.bad = bad
        self.goal = goal
        self.terminal = terminal
        self.initial = initial
        self.meta = meta or {}

    @classmethod
    def from_graph(cls, nodes, bad=(), goal=(), initial=None):
        """Build a small arena from `{name: (turn, [(label, succ), ...])}`.

        `turn` is "c" or "e"; intended for hand-written fixtures.
        """
        names = list(nodes)
        index = {name: i for i, name in enumerate(names)}
        turn = [TURN_CTRL if nodes[n][0] == "c" else TURN_ENV for n in names]
        edges = [[(label, index[succ]) for label, succ in nodes[n][1]] for n in names]
        bad_l = [n in set(bad) for n in names]
        goal_l = [n in set(goal) for n in names]
        terminal = [not e or b or g for e, b, g in zip(edges, bad_l, goal_l)]
        edges = [([] if terminal[i] else e) for i, e in enumerate(edges)]
        return cls(names, index, turn, edges, bad_l, goal_l, terminal,
                   index[initial if initial is not None else names[0]])

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_edges(self):
        return sum(len(e) for e in self.edges)

    def describe(self, i):
        return f"{'C' if self.turn[i] == TURN_CTRL else 'E'}:{self.states[i]!r}"


def grid_lattice_checks(scenario, params, cfg):
    """All accelerations and initial conditions must sit on the lattice."""
    eps = scenario.epoch
    if not math.isclose(eps * POS_SCALE / VEL_SCALE, round(eps * POS_SCALE / VEL_SCALE)):
        raise ValueError(f"epoch {eps} incompatible with the position lattice")
    accs = set(params.acc_set) | {a for _, a in scenario.profile.segments}
    accs |= {cfg.acc_floor, cfg.acc_cap}
    for a in sorted(accs):
        _scaled(a * eps, VEL_SCALE, "velocity increment for acc")
    for value, scale, what in (
        (scenario.lead_pos, POS_SCALE, "lead_pos"),
        (scenario.follow_pos, POS_SCALE, "follow_pos"),
        (scenario.dest, POS_SCALE, "dest"),
        (scenario.lead_vel, VEL_SCALE, "lead_vel"),
        (scenario.follow_vel, VEL_SCALE, "follow_vel"),
        (scenario.v_max, VEL_SCALE, "v_max"),
    ):
        _scaled(value, scale, what)


def lead_trajectory(scenario):
    """Scaled lead (pos, vel) per epoch index, 0..horizon inclusive."""
    eps = scenario.epoch
    pos_q = _scaled(scenario.lead_pos, POS_SCALE, "lead_pos")
    vel_q = _scaled(scenario.lead_vel, VEL_SCALE, "lead_vel")
    vmax_q = _scaled(scenario.v_max, VEL_SCALE, "v_max")
    pos_step = round(eps * POS_SCALE / VEL_SCALE)
    out = [(pos_q, vel_q)]
    for k in range(scenario.horizon_epochs):
        acc = scenario.profile.acc_at(k * eps)
        dv = _scaled(acc * eps, VEL_SCALE, "lead acc step")
        pos_q = pos_q + vel_q * pos_step
        vel_q = min(max(vel_q + dv, 0), vmax_q)
        out.append((pos_q, vel_q))
    return out


def build_arena(hm, scenario, cfg=None, params=None, variant="full",
                state_cap=2_000_000):
    """Enumerate the reachable product arena for one scenario and variant."""
    cfg = cfg if cfg is not None else scenario.supervisor_config()
    params = params if params is not None else DriverParams()
    if tuple(hm.inputs) != params.levels():
        raise AlphabetMismatch(
            f"abstraction alphabet {hm.inputs!r} does not match "
            f"the {params.num_levels} quantization levels")
    if variant not in VARIANT_ACTIONS:
        raise ValueError(f"unknown variant {variant!r}")
    grid_lattice_checks(scenario, params, cfg)

    actions = VARIANT_ACTIONS[variant]
    eps = scenario.epoch
    horizon = scenario.horizon_epochs
    lead = lead_trajectory(scenario)
    dest_q = _scaled(scenario.dest, POS_SCALE, "dest")
    vmax_q = _scaled(scenario.v_max, VEL_SCALE, "v_max")
    pos_step = round(eps * POS_SCALE / VEL_SCALE)
    model = scenario.sensor_model()
    num_levels = params.num_levels
    driver = AbstractDriver(hm, params)
    dv_of = {}  # applied acceleration -> scaled velocity increment

    states = []
    index = {}
    edges = []
    turn = []
    bad = []
    goal = []
    terminal = []

    def intern(s):
        i = index.get(s)
        if i is None:
            i = len(states)
            if i >= state_cap:
                raise ArenaCapExceeded(f"arena exceeds {state_cap} states")
            index[s] = i
            states.append(s)
            edges.append([])
            turn.append(s[0])
            bad.append(False)
            goal.append(False)
            terminal.append(False)
        return i

    init = (TURN_ENV, 0,
            _scaled(scenario.follow_pos, POS_SCALE, "follow_pos"),
            _scaled(scenario.follow_vel, VEL_SCALE, "follow_vel"),
            hm.initial, 0)
    queue = deque([intern(init)])
    while queue:
        i = queue.popleft()
        s = states[i]
        if s[0] == TURN_ENV:
            _, k, fp, fv, q, hinted = s
            lp, _lv = lead[k]
            is_bad = fp >= lp
            # reaching the destination only wins when the state is also safe
            is_goal = fp >= dest_q and not is_bad
            bad[i] = is_bad
            goal[i] = is_goal
            if is_bad or is_goal or k == horizon:
                terminal[i] = True
                continue
            thw, _ttc = headway_metrics(lp / POS_SCALE, _lv / VEL_SCALE,
                                        fp / POS_SCALE, fv / VEL_SCALE)
            level = quantize_thw(thw, params.thw_levels)
            for p in sensor_perturb(level, model, num_levels):
                q2, dacc, _full = driver.step(q, hinted, p)
                cs = (TURN_CTRL, k, fp, fv, q2, dacc)
                j = index.get(cs)
                if j is None:
                    j = intern(cs)
                    queue.append(j)
                edges[i].append((p, j))
        else:
            _, k, fp, fv, q2, dacc = s
            for action in actions:
                mode2 = ACTION_MODE[action]
                applied, _ = arbitrate(mode2, dacc, cfg)
                dv = dv_of.get(applied)
                if dv is None:
                    dv = _scaled(applied * eps, VEL_SCALE, "velocity increment")
                    dv_of[applied] = dv
                fp2 = fp + fv * pos_step
                fv2 = min(max(fv + dv, 0), vmax_q)
                es = (TURN_ENV, k + 1, fp2, fv2, q2,
                      1 if action == ACTION_HINT else 0)
                j = index.get(es)
                if j is None:
                    j = intern(es)
                    queue.append(j)
                edges[i].append((action, j))

    meta = {
        "scenario": scenario,
        "cfg": cfg,
        "params": params,
        "variant": variant,
        "hm": hm,
        "driver": driver,
        "lead": lead,
    }
    return GameArena(states, index, turn, edges, bad, goal, terminal,
                     index[init], meta)


@dataclass
class WinningRegion:
    members: frozenset
    iterations: int

    def __contains__(self, i):
        return i in self.members

    def __len__(self):
        return len(self.members)


def solve(arena):
    """Greatest set of states from which the controller wins the weak-until
    objective, computed as the complement of the environment's attractor to
    the bad states.  Bad states lose (even past the destination), non-bad
    goal states win unconditionally, and terminal non-bad states (horizon
    reached without overtaking) are safe.
    """
    n = arena.n_states
    lose = bytearray(n)
    preds = [[] for _ in range(n)]
    pending = [0] * n
    for i, es in enumerate(arena.edges):
        for _label, j in es:
            preds[j].append(i)
        if arena.turn[i] == TURN_CTRL:
            pending[i] = len(es)
    queue = deque()
    for i in range(n):
        if arena.bad[i]:
            lose[i] = 1
            queue.append(i)
    iterations = 0
    while queue:
        j = queue.popleft()
        iterations += 1
        for i in preds[j]:
            if lose[i] or arena.goal[i]:
                continue
            if arena.turn[i] == TURN_ENV:
                lose[i] = 1
                queue.append(i)
            else:
                pending[i] -= 1
                if pending[i] == 0:
                    lose[i] = 1
                    queue.append(i)
    members = frozenset(i for i in range(n) if not lose[i])
    return WinningRegion(members, iterations)


def realizable(arena, region):
    return arena.initial in region


@dataclass
class Strategy:
    """Memoryless controller: winning controller-turn state -> action."""

    actions: dict
    variant: str = "full"
    meta: dict = field(default_factory=dict)

    def action_for(self, state):
        return self.actions.get(state)


@dataclass
class ConstantStrategy:
    """Fixed-action stub (baselines and mutation tests)."""

    action: str
    variant: str = "full"

    def action_for(self, state):
        return self.action


def _candidate_rank(arena, state, action):
    """Tie-break key: severity, clamp distance, action ordinal.

    Fixture arenas with free-form edge labels rank everything equal, so the
    first winning edge is kept.
    """
    if action not in ACTION_SEVERITY:
        return (0, 0, 0)
    severity = ACTION_SEVERITY[action]
    ordinal = ACTIONS.index(action)
    cfg = arena.meta.get("cfg")
    if cfg is not None and isinstance(state, tuple) and len(state) == 6:
        dacc = state[5]
        applied, _ = arbitrate(ACTION_MODE[action], dacc, cfg)
        return (severity, abs(applied - dacc), ordinal)
    return (severity, 0, ordinal)


def extract_strategy(arena, region):
    """Pick one winning action per controller state in the winning region.

    Tie-break: least intervention severity (none < hint < override), then
    smallest |applied - driver_acc|, then action ordinal.
    """
    if not realizable(arena, region):
        raise Unrealizable("initial state is not in the winning region")
    mapping = {}
    for i in range(arena.n_states):
        if arena.turn[i] != TURN_CTRL or i not in region or arena.terminal[i]:
            continue
        state = arena.states[i]
        best_key = None
        best_action = None
        for action, j in arena.edges[i]:
            if j not in region:
                continue
            key = _candidate_rank(arena, state, action)
            if best_key is None or key < best_key:
                best_key = key
                best_action = action
        if best_action is None:
            raise RuntimeError(f"winning controller state {state!r} has no winning action")
        mapping[state] = best_action
    return Strategy(mapping, arena.meta.get("variant", "full"),
                    {"scenario": getattr(arena.meta.get("scenario"), "name", "?")})


@dataclass
class TemplateReport:
    """Result of the winning-condition template checks over strategy plays."""

    visited: int = 0
    safety_ok: bool = True
    safety_witness: object = None
    goal_terminals: int = 0
    horizon_terminals: int = 0
    reach_ok: bool = True
    min_intervention_ok: bool = True
    min_intervention_witness: object = None
    response_ok: bool = True
    response_witness: object = None

    @property
    def all_ok(self):
        return (self.safety_ok and self.reach_ok and
                self.min_intervention_ok and self.response_ok)

    def text(self):
        lines = [
            f"states_visited={self.visited}",
            f"safety={'pass' if self.safety_ok else 'FAIL'}",
            f"reachability={'pass' if self.reach_ok else 'FAIL'} "
            f"(goal_terminals={self.goal_terminals}, horizon_terminals={self.horizon_terminals})",
            f"min_intervention={'pass' if self.min_intervention_ok else 'FAIL'}",
            f"response={'pass' if self.response_ok else 'FAIL'}",
        ]
        if self.safety_witness is not None:
            lines.append(f"safety_witness={self.safety_witness!r}")
        if self.min_intervention_witness is not None:
            lines.append(f"min_intervention_witness={self.min_intervention_witness!r}")
        if self.response_witness is not None:
            lines.append(f"response_witness={self.response_witness!r}")
        return "\n".join(lines) + "\n"


def check_templates(arena, strategy):
    """Exhaustively walk all strategy-consistent plays and check:

    (i) no bad state is reached; (ii) every maximal play ends in a goal
    state (horizon-only terminals are reported distinctly); (iii) no
    controller decision applies an override while the state is deep-safe;
    (iv) a hint is always followed by a full-deliberation driver edge.
    """
    report = TemplateReport()
    meta = arena.meta
    cfg = meta.get("cfg")
    driver = meta.get("driver")
    lead = meta.get("lead")
    built = driver is not None and cfg is not None and lead is not None
    seen = {arena.initial}
    queue = deque([arena.initial])
    while queue:
        i = queue.popleft()
        report.visited += 1
        s = arena.states[i]
        if arena.bad[i]:
            if report.safety_ok:
                report.safety_ok = False
                report.safety_witness = s
            continue
        if arena.terminal[i]:
            if arena.goal[i]:
                report.goal_terminals += 1
            else:
                report.horizon_terminals += 1
            continue
        if arena.turn[i] == TURN_ENV:
            if built and s[5]:
                for p, _j in arena.edges[i]:
                    _q2, _acc, full = driver.step(s[4], 1, p)
                    if not full and report.response_ok:
                        report.response_ok = False
                        report.response_witness = (s, p)
            for _label, j in arena.edges[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        else:
            action = strategy.action_for(s)
            if action is None:
                raise KeyError(f"strategy undefined on reachable state {s!r}")
            if built and action == ACTION_OVERRIDE:
                k, fp, fv = s[1], s[2], s[3]
                lp, lv = lead[k]
                thw, ttc = headway_metrics(lp / POS_SCALE, lv / VEL_SCALE,
                                           fp / POS_SCALE, fv / VEL_SCALE)
                th = cfg.thresholds
                if safe_now(thw, ttc, th) and not risk_warn(thw, ttc, th):
                    if report.min_intervention_ok:
                        report.min_intervention_ok = False
                        report.min_intervention_witness = s
            for label, j in arena.edges[i]:
                if label == action and j not in seen:
                    seen.add(j)
                    queue.append(j)
    report.reach_ok = report.horizon_terminals == 0 and report.goal_terminals > 0
    return report


def serialize_strategy(strategy):
    """Canonical text form: sorted `state-key action` lines."""
    lines = [f"strategy v1 {strategy.variant} {len(strategy.actions)}"]
    for state in sorted(strategy.actions):
        _, k, fp, fv, hm_state, dacc = state
        action = strategy.actions[state]
        lines.append(f"{k} {fp} {fv} {hm_state} {dacc!r} {action}")
    return "\n".join(lines) + "\n"


def parse_strategy(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty strategy text")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "strategy" or header[1] != "v1":
        raise ValueError(f"bad strategy header: {lines[0]!r}")
    variant = header[2]
    count = int(header[3])
    if len(lines) - 1 != count:
        raise ValueError(f"expected {count} strategy lines, got {len(lines) - 1}")
    mapping = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 6:
            raise ValueError(f"bad strategy line: {ln!r}")
        k, fp, fv, hm_state = (int(x) for x in parts[:4])
        raw = parts[4]
        dacc = int(raw) if raw.lstrip("-").isdigit() else float(raw)
        action = parts[5]
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        mapping[(TURN_CTRL, k, fp, fv, hm_state, dacc)] = action
    return Strategy(mapping, variant)


def arena_stats_text(arena, region=None):
    n_ctrl = sum(1 for t in arena.turn if t == TURN_CTRL)
    lines = [
        f"states={arena.n_states}",
        f"edges={arena.n_edges}",
        f"controller_states={n_ctrl}",
        f"environment_states={arena.n_states - n_ctrl}",
        f"bad_states={sum(arena.bad)}",
        f"goal_states={sum(arena.goal)}",
        f"variant={arena.meta.get('variant', '?')}",
    ]
    if region is not None:
        lines.append(f"winning_states={len(region)}")
        lines.append(f"solver_iterations={region.iterations}")
        lines.append(f"realizable={'true' if realizable(arena, region) else 'false'}")
    return "\n".join(lines) + "\n"


def arena_to_dot(arena, name="arena"):
    """DOT rendering for small arenas (documentation of fixtures)."""
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for i, s in enumerate(arena.states):
        shape = "box" if arena.turn[i] == TURN_CTRL else "ellipse"
        color = ""
        if arena.bad[i]:
            color = ', style=filled, fillcolor="#f4cccc"'
        elif arena.goal[i]:
            color = ', style=filled, fillcolor="#d9ead3"'
        lines.append(f'  n{i} [shape={shape}, label="{s}"{color}];')
    lines.append(f"  __start [shape=point];")
    lines.append(f"  __start -> n{arena.initial};")
    for i, es in enumerate(arena.edges):
        for label, j in es:
            lines.append(f'  n{i} -> n{j} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
