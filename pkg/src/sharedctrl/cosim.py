"""Closed-loop validation of synthesized strategies against the full driver.

A strategy is executed with the stateful cognitive driver in the loop (not
the learned abstraction), while a mirror of the abstraction tracks which
game state the play corresponds to.  Objective monitoring classifies each
trace; traces that violate an objective (or that fall off the abstraction,
observed as strategy-lookup misses) feed the counterexample-driven
refinement loop.
"""

from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass, field, replace

from .driver import CognitiveDriver, DriverParams, FULL_CHAIN
from .game import (
    AbstractDriver,
    POS_SCALE,
    TURN_CTRL,
    VEL_SCALE,
    build_arena,
    extract_strategy,
    realizable,
    solve,
)
from .lstar import EqOracleConfig, LearningSession, NotDistinguishing, RandomWalkOracle
from .mealy import minimize, serialize
from .supervisor import ACTION_HINT, ACTION_MODE, ACTION_OVERRIDE, Mode, arbitrate, safe_now
from .world import headway_metrics, quantize_thw, sensor_perturb, step_world

TRACE_COLUMNS = (
    "t", "lead_pos", "follow_pos", "lead_vel", "follow_vel", "thw", "ttc",
    "control_mode", "driver_acc", "follow_acc", "controller_action",
    "perceived_level", "rule_chain",
)

STATUS_PASS = "safe-and-reached"
STATUS_SAFETY = "safety-violation"
STATUS_GOAL = "goal-not-reached"
STATUS_MIN_INTERVENTION = "min-intervention-violation"
STATUS_RESPONSE = "response-violation"


def derive_seed(seed, tag):
    """Stable fan-out of one master seed into per-purpose seeds."""
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class TraceRow:
    t: float
    lead_pos: float
    lead_vel: float
    follow_pos: float
    follow_vel: float
    thw: float
    ttc: float
    mode: str
    driver_acc: float
    applied_acc: float
    action: str
    perceived_level: int
    rule_chain: tuple


@dataclass
class SimTrace:
    rows: list
    initial_world: object
    final_world: object
    lookup_misses: int = 0
    seed: object = None

    def stimulus_word(self):
        return tuple(row.perceived_level for row in self.rows)


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: object = None

    @property
    def passed(self):
        return self.status == STATUS_PASS


def write_trace_csv(trace, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            writer.writerow([
                row.t, row.lead_pos, row.follow_pos, row.lead_vel,
                row.follow_vel, row.thw, row.ttc, row.mode, row.driver_acc,
                row.applied_acc, row.action, row.perceived_level,
                "|".join(row.rule_chain),
            ])


def execute(strategy, sul, scenario, cfg, seed, hm, params=None):
    """Run one seeded closed-loop episode; returns the trace.

    Per epoch: sample the perceived headway level, query the full driver,
    resolve the matching game state through the abstraction mirror, look up
    the strategy action, arbitrate, and advance the world.  A lookup miss
    means the driver left the learned abstraction; the fail-safe fallback
    forces Intervention at maximal braking and is counted on the trace.
    """
    params = params if params is not None else getattr(sul, "params", DriverParams())
    mirror = AbstractDriver(hm, params)
    rng = random.Random(seed)
    model = scenario.sensor_model()
    eps = scenario.epoch
    sul.reset()
    world = scenario.initial_world()
    initial_world = world
    q = hm.initial
    hinted = 0
    mode = Mode.NOMINAL
    rows = []
    misses = 0
    for k in range(scenario.horizon_epochs):
        if world.follow.pos >= world.lead.pos:
            break
        if world.follow.pos >= scenario.dest:
            break
        thw, ttc = headway_metrics(world.lead.pos, world.lead.vel,
                                   world.follow.pos, world.follow.vel)
        level = quantize_thw(thw, params.thw_levels)
        perceived = rng.choice(sensor_perturb(level, model, params.num_levels))
        chain, dacc = sul.query(perceived)
        q, _dacc_pred, _full = mirror.step(q, hinted, perceived)
        key = (TURN_CTRL, k,
               round(world.follow.pos * POS_SCALE),
               round(world.follow.vel * VEL_SCALE),
               q, dacc)
        action = strategy.action_for(key)
        if action is None:
            misses += 1
            action = ACTION_OVERRIDE
            mode = Mode.INTERVENTION
            applied = cfg.acc_floor
        else:
            mode = ACTION_MODE[action]
            applied, _ = arbitrate(mode, dacc, cfg)
        if action == ACTION_HINT:
            sul.apply_hint()
            hinted = 1
        else:
            hinted = 0
        rows.append(TraceRow(
            t=k * eps,
            lead_pos=world.lead.pos, lead_vel=world.lead.vel,
            follow_pos=world.follow.pos, follow_vel=world.follow.vel,
            thw=thw, ttc=ttc, mode=mode.label,
            driver_acc=dacc, applied_acc=applied, action=action,
            perceived_level=perceived, rule_chain=chain,
        ))
        world = step_world(world, applied, eps, scenario.profile, scenario.v_max)
    return SimTrace(rows, initial_world, world, misses, seed)


def monitor(trace, dest, thresholds):
    """Classify a trace; the first violated objective (in priority order) wins."""
    for idx, row in enumerate(trace.rows):
        if row.follow_pos >= row.lead_pos:
            return Verdict(STATUS_SAFETY, idx)
    final = trace.final_world
    if final.follow.pos >= final.lead.pos:
        return Verdict(STATUS_SAFETY, len(trace.rows))
    if final.follow.pos < dest:
        return Verdict(STATUS_GOAL, max(len(trace.rows) - 1, 0))
    for idx, row in enumerate(trace.rows):
        if row.mode == Mode.INTERVENTION.label and safe_now(row.thw, row.ttc, thresholds):
            return Verdict(STATUS_MIN_INTERVENTION, idx)
    for idx, row in enumerate(trace.rows):
        if row.action == ACTION_HINT and idx + 1 < len(trace.rows):
            if trace.rows[idx + 1].rule_chain != FULL_CHAIN:
                return Verdict(STATUS_RESPONSE, idx + 1)
    return Verdict(STATUS_PASS, None)


def refine(session, traces, params=None):
    """Inject the stimulus words of violating traces as counterexamples.

    Each word is first checked to actually distinguish driver and current
    abstraction; non-distinguishing traces are skipped (their violation
    stems from the arena or scenario, not from abstraction fidelity).
    Returns `(machine, injected, skipped)`.
    """
    injected = 0
    skipped = 0
    seen = set()
    for trace in traces:
        word = trace.stimulus_word()
        if not word or word in seen:
            skipped += 1
            continue
        seen.add(word)
        try:
            session.inject_counterexample(word)
            injected += 1
        except NotDistinguishing:
            skipped += 1
    if injected:
        machine, _stats = session.run()
    else:
        machine = session.machine
    return machine, injected, skipped


@dataclass
class RefineLoopConfig:
    oracle: EqOracleConfig = field(default_factory=EqOracleConfig)
    params: DriverParams = field(default_factory=DriverParams)
    variant: str = "full"
    seed: int = 0
    runs: int = 25
    max_iterations: int = 10
    initial_state_cap: int = None
    expand_on_unrealizable: bool = False
    arena_state_cap: int = 2_000_000


@dataclass
class IterationRecord:
    index: int
    hm_states: int
    realizable: bool
    variant: str
    verdicts: list = field(default_factory=list)
    lookup_misses: int = 0
    injected: int = 0
    skipped: int = 0

    def line(self):
        counts = {}
        for v in self.verdicts:
            counts[v.status] = counts.get(v.status, 0) + 1
        verdict_text = ",".join(f"{k}:{v}" for k, v in sorted(counts.items())) or "-"
        return (f"iteration={self.index} hm_states={self.hm_states} "
                f"variant={self.variant} "
                f"realizable={'true' if self.realizable else 'false'} "
                f"verdicts={verdict_text} misses={self.lookup_misses} "
                f"injected={self.injected} skipped={self.skipped}")


@dataclass
class RefinementReport:
    iterations: list
    termination_reason: str

    def text(self):
        lines = ["refinement report", f"termination={self.termination_reason}"]
        lines.extend(record.line() for record in self.iterations)
        return "\n".join(lines) + "\n"


@dataclass
class IterationArtifacts:
    hm: object
    strategy: object = None
    traces: list = field(default_factory=list)


_VARIANT_LADDER = ("advisory-only", "no-override", "full")


def refine_loop(scenario, cfg):
    """Learn, synthesize, validate, refine until the objectives hold.

    Stops on all-pass, on the iteration cap, on abstraction stability, or on
    an unrealizable arena (unless variant expansion is enabled and a larger
    controllable action set is available).  Returns `(report, artifacts)`
    where artifacts carry per-iteration machines, strategies, and traces.
    """
    params = cfg.params
    sup = scenario.supervisor_config()
    sul = CognitiveDriver(params)
    oracle_cfg = replace(cfg.oracle, rng_seed=derive_seed(cfg.seed, "oracle"))
    session = LearningSession(sul, params.levels(), RandomWalkOracle(sul, oracle_cfg),
                              state_cap=cfg.initial_state_cap)
    hm, _stats = session.run()
    variant = cfg.variant
    records = []
    artifacts = []
    reason = "max-iterations"
    it = 0
    while it < cfg.max_iterations:
        arena = build_arena(hm, scenario, sup, params, variant, cfg.arena_state_cap)
        region = solve(arena)
        record = IterationRecord(it, len(hm.states), realizable(arena, region), variant)
        art = IterationArtifacts(hm)
        records.append(record)
        artifacts.append(art)
        if not record.realizable:
            if cfg.expand_on_unrealizable:
                pos = _VARIANT_LADDER.index(variant)
                if pos + 1 < len(_VARIANT_LADDER):
                    variant = _VARIANT_LADDER[pos + 1]
                    it += 1
                    continue
            reason = "unrealizable"
            break
        strategy = extract_strategy(arena, region)
        art.strategy = strategy
        violating = []
        for r in range(cfg.runs):
            run_sul = CognitiveDriver(params)
            trace = execute(strategy, run_sul, scenario, sup,
                            derive_seed(cfg.seed, f"it{it}:run{r}"), hm, params)
            verdict = monitor(trace, scenario.dest, sup.thresholds)
            record.verdicts.append(verdict)
            record.lookup_misses += trace.lookup_misses
            art.traces.append((trace, verdict))
            if not verdict.passed or trace.lookup_misses:
                violating.append(trace)
        if all(v.passed for v in record.verdicts):
            reason = "all-pass"
            break
        new_hm, injected, skipped = refine(session, violating)
        record.injected = injected
        record.skipped = skipped
        if serialize(minimize(new_hm)) == serialize(minimize(hm)):
            reason = "stable"
            break
        hm = new_hm
        it += 1
    return RefinementReport(records, reason), artifacts
