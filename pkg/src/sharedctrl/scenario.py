"""Scenario definitions: initial conditions, lead profile, supervision settings.

Scenarios live in a plain-text `key=value` format with one `profile t acc`
line per lead-profile segment.  Two built-in scenarios are provided: the
default car-following setting and a harsher braking variant used for
design-space exploration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .supervisor import HazardThresholds, SupervisorConfig
from .world import LeadProfile, SensorErrorModel, VehicleState, WorldState, V_MAX_DEFAULT

BUILTIN_NAMES = ("default", "braking")


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    lead_pos: float = 50.0
    lead_vel: float = 12.0
    follow_pos: float = 0.0
    follow_vel: float = 15.0
    dest: float = 150.0
    epoch: float = 0.5
    horizon_epochs: int = 28
    sensor_offset: int = 1
    v_max: float = 16.0
    profile: LeadProfile = field(default_factory=lambda: LeadProfile([(0.0, 0.0)]))
    thresholds: HazardThresholds = field(default_factory=HazardThresholds)
    acc_floor: float = -3.0
    acc_cap: float = -1.0
    lookahead_steps: int = 2

    def __post_init__(self):
        if self.lead_pos <= self.follow_pos:
            raise ValueError("initial gap must be positive")
        if self.epoch <= 0 or self.horizon_epochs < 0:
            raise ValueError("epoch must be positive, horizon non-negative")
        if self.sensor_offset < 0:
            raise ValueError("sensor_offset must be >= 0")

    def initial_world(self):
        return WorldState(
            lead=VehicleState(self.lead_pos, self.lead_vel, self.profile.acc_at(0.0)),
            follow=VehicleState(self.follow_pos, self.follow_vel, 0.0),
            t=0.0,
            dest=self.dest,
        )

    def supervisor_config(self):
        return SupervisorConfig(
            thresholds=self.thresholds,
            acc_floor=self.acc_floor,
            acc_cap=self.acc_cap,
            lookahead_steps=self.lookahead_steps,
        )

    def sensor_model(self):
        return SensorErrorModel(self.sensor_offset)

    def to_text(self):
        th = self.thresholds
        lines = [
            f"name={self.name}",
            f"lead_pos={self.lead_pos}",
            f"lead_vel={self.lead_vel}",
            f"follow_pos={self.follow_pos}",
            f"follow_vel={self.follow_vel}",
            f"dest={self.dest}",
            f"epoch={self.epoch}",
            f"horizon_epochs={self.horizon_epochs}",
            f"sensor_offset={self.sensor_offset}",
            f"v_max={self.v_max}",
            f"thw_warn={th.thw_warn}",
            f"ttc_warn={th.ttc_warn}",
            f"thw_min={th.thw_min}",
            f"ttc_min={th.ttc_min}",
            f"thw_safe={th.thw_safe}",
            f"ttc_safe={th.ttc_safe}",
            f"acc_floor={self.acc_floor}",
            f"acc_cap={self.acc_cap}",
            f"lookahead={self.lookahead_steps}",
        ]
        for t, a in self.profile.segments:
            lines.append(f"profile {t} {a}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        values = {}
        segments = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("profile"):
                parts = line.split()
                if len(parts) != 3:
                    raise ValueError(f"bad profile line: {line!r}")
                segments.append((float(parts[1]), float(parts[2])))
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"bad scenario line: {line!r}")
            values[key.strip()] = value.strip()

        def fnum(key, default):
            return float(values[key]) if key in values else default

        thresholds = HazardThresholds(
            thw_warn=fnum("thw_warn", 1.5),
            ttc_warn=fnum("ttc_warn", 2.0),
            thw_min=fnum("thw_min", 0.8),
            ttc_min=fnum("ttc_min", 1.0),
            thw_safe=fnum("thw_safe", 2.0),
            ttc_safe=fnum("ttc_safe", 3.0),
        )
        return cls(
            name=values.get("name", "scenario"),
            lead_pos=fnum("lead_pos", 50.0),
            lead_vel=fnum("lead_vel", 12.0),
            follow_pos=fnum("follow_pos", 0.0),
            follow_vel=fnum("follow_vel", 15.0),
            dest=fnum("dest", 300.0),
            epoch=fnum("epoch", 0.5),
            horizon_epochs=int(fnum("horizon_epochs", 60)),
            sensor_offset=int(fnum("sensor_offset", 1)),
            v_max=fnum("v_max", V_MAX_DEFAULT),
            profile=LeadProfile(segments or [(0.0, 0.0)]),
            thresholds=thresholds,
            acc_floor=fnum("acc_floor", -3.0),
            acc_cap=fnum("acc_cap", -1.0),
            lookahead_steps=int(fnum("lookahead", 2)),
        )

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def default_scenario():
    """Car following with a lead braking phase at t in [5, 8) s.

    The lead recovers its initial speed afterwards so the destination stays
    reachable within the horizon.
    """
    return Scenario(
        name="default",
        profile=LeadProfile([(0.0, 0.0), (5.0, -2.0), (8.0, 2.0), (11.0, 0.0)]),
    )


def braking_scenario():
    """Short-gap approach onto a lead that brakes to a crawl.

    Separates the design variants: without the override channel the sensor
    noise can goad the driver into the closing gap, while clamping from the
    first warning keeps the follower slow enough to survive the dip.
    """
    return Scenario(
        name="braking",
        lead_pos=40.0,
        lead_vel=14.0,
        follow_pos=0.0,
        follow_vel=14.0,
        dest=150.0,
        horizon_epochs=34,
        v_max=22.0,
        profile=LeadProfile([(0.0, 0.0), (4.0, -3.0), (8.0, 2.0), (14.0, 0.0)]),
    )


def load_scenario(ref):
    """Resolve a scenario reference: a builtin name or a file path."""
    if ref == "default":
        return default_scenario()
    if ref == "braking":
        return braking_scenario()
    return Scenario.from_file(ref)
