"""Episodic simulation of three piston compressors filling an air tank.

Episodes run 250 steps of one simulated minute each. The agent sets a target
speed per compressor through an action in [-1, 1]^3; a valve drains the tank
following a per-episode demand curve the agent never observes. Rewards are
the negative energy bill in kilojoules, plus a turn-on surcharge whenever a
compressor goes from off to running. Pressure below 3 bar hands control to a
backup policy (all compressors at max speed) for the next step.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64
from .variants import VariantSpec, interpolate_power

EPISODE_STEPS = 250
SECONDS_PER_STEP = 60.0
DT_MINUTES = 1.0
WATTS_TO_KJ = SECONDS_PER_STEP * 0.001  # kJ per watt over one step

INITIAL_PRESSURE = 4.0  # bar
BACKUP_THRESHOLD = 3.0  # bar
PRESSURE_CENTER = 4.0
PRESSURE_SCALE = 2.0

RPM_OFF_BELOW = 20.0

N_PRESSURE_HISTORY = 5
N_RPM_HISTORY = 3
OBS_DIM = N_PRESSURE_HISTORY + 3 * N_RPM_HISTORY

DEMAND_WAYPOINT_SPACING = 25
DEMAND_MAX_FRACTION = 0.8

TRAJECTORY_COLUMNS = (
    "step",
    "pressure_bar",
    "rpm1",
    "rpm2",
    "rpm3",
    "demand_nlpm",
    "reward_kj",
    "backup",
)


class DemandCurve:
    """Outflow demand in nl/min, linearly interpolated between waypoints."""

    def __init__(self, waypoints):
        self.waypoints = tuple((float(t), float(v)) for t, v in waypoints)
        if self.waypoints[0][0] != 0.0 or self.waypoints[-1][0] < EPISODE_STEPS:
            raise ValueError("demand curve must cover t in [0, 250]")
        # dense per-step lookup used in the hot loop
        self._values = np.array([self.value_at(float(t)) for t in range(EPISODE_STEPS + 1)])

    def value_at(self, t: float) -> float:
        points = self.waypoints
        if t <= points[0][0]:
            return points[0][1]
        if t >= points[-1][0]:
            return points[-1][1]
        for (t0, v0), (t1, v1) in zip(points, points[1:]):
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return points[-1][1]

    def step_values(self) -> np.ndarray:
        return self._values

    @classmethod
    def constant(cls, value: float) -> "DemandCurve":
        return cls(((0, value), (EPISODE_STEPS, value)))


def demand_ceiling(variant: VariantSpec) -> float:
    """Largest demand a random curve may request: 80% of the combined max inflow."""
    return DEMAND_MAX_FRACTION * variant.max_inflow()


def generate_demand(rng: SplitMix64, variant: VariantSpec) -> DemandCurve:
    """Fresh per-episode demand: uniform waypoints every 25 steps."""
    cap = demand_ceiling(variant)
    times = range(0, EPISODE_STEPS + 1, DEMAND_WAYPOINT_SPACING)
    return DemandCurve([(t, cap * rng.uniform()) for t in times])


def map_action(action, variant: VariantSpec) -> tuple[float, float, float]:
    """Map an action in [-1, 1]^3 to executed RPM targets.

    Per component: the raw target is (a+1)/2 of max RPM; below 20 RPM the
    compressor is switched off, between 20 RPM and the minimum speed it is
    raised to the minimum, above that it is left untouched. Out-of-range
    finite inputs are clamped; non-finite inputs are rejected.
    """
    rpms = []
    for a in action:
        a = float(a)
        if not math.isfinite(a):
            raise ValueError(f"action component must be finite, got {a}")
        a = min(1.0, max(-1.0, a))
        raw = (a + 1.0) / 2.0 * variant.max_rpm
        if raw < RPM_OFF_BELOW:
            rpms.append(0.0)
        elif raw < variant.min_rpm:
            rpms.append(variant.min_rpm)
        else:
            rpms.append(raw)
    return tuple(rpms)


def action_for_rpm(rpms, variant: VariantSpec) -> tuple[float, float, float]:
    """Canonical action that `map_action` sends to the given executed RPMs."""
    out = []
    for r in rpms:
        out.append(-1.0 if r == 0.0 else 2.0 * r / variant.max_rpm - 1.0)
    return tuple(out)


def physics_update(pressure: float, executed_rpm, demand_t: float, variant: VariantSpec) -> float:
    """One minute of isothermal normal-liter accounting; returns the new pressure.

    1 bar is equivalent to one tank volume of normal liters, so the gas
    stored above vacuum at pressure p is p*V normal liters. Outflow can not
    exceed that stock.
    """
    v = variant.tank_volume
    inflow = sum(c * r for c, r in zip(variant.flow_coeffs, executed_rpm)) * DT_MINUTES
    outflow = min(demand_t * DT_MINUTES, pressure * v)
    return max(0.0, pressure + (inflow - outflow) / v)


def energy_kj(executed_rpm, variant: VariantSpec) -> float:
    """Energy consumed over one step at the executed speeds."""
    return sum(
        WATTS_TO_KJ * interpolate_power(variant.power_tables[i], executed_rpm[i])
        for i in range(3)
    )


def turn_on_kj(prev_rpm, executed_rpm, variant: VariantSpec) -> float:
    """Surcharge for compressors that go from off to running this step."""
    total = 0.0
    for i in range(3):
        if prev_rpm[i] == 0.0 and executed_rpm[i] > 0.0:
            total += WATTS_TO_KJ * interpolate_power(variant.power_tables[i], variant.max_rpm)
    return total


def compute_reward(prev_rpm, executed_rpm, variant: VariantSpec) -> float:
    """Reward in kJ (always <= 0): minus energy, minus turn-on surcharges."""
    return -(energy_kj(executed_rpm, variant) + turn_on_kj(prev_rpm, executed_rpm, variant))


@dataclass
class StepInfo:
    executed_rpm: tuple[float, float, float]
    executed_action: tuple[float, float, float]
    backup: bool
    demand: float
    energy_kj: float
    turn_on_kj: float
    pressure: float


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: StepInfo


class CompressorEnv:
    """The MDP; one instance per run, episodes started via `reset`."""

    def __init__(self, variant: VariantSpec, demand: DemandCurve | None = None):
        self.variant = variant
        self.fixed_demand = demand
        self.pressure = INITIAL_PRESSURE
        self.rpms = (0.0, 0.0, 0.0)
        self.step_index = 0
        self.backup_engaged = False
        self.demand: DemandCurve | None = None
        self._demand_values: np.ndarray | None = None
        self._pressure_history: list[float] = []
        self._rpm_history: list[tuple[float, float, float]] = []

    def reset(self, episode_seed: int) -> np.ndarray:
        """Start a new episode; the seed determines the demand curve."""
        self.pressure = INITIAL_PRESSURE
        self.rpms = (0.0, 0.0, 0.0)
        self.step_index = 0
        self.backup_engaged = False
        if self.fixed_demand is not None:
            self.demand = self.fixed_demand
        else:
            self.demand = generate_demand(SplitMix64(episode_seed), self.variant)
        self._demand_values = self.demand.step_values()
        self._pressure_history = [INITIAL_PRESSURE] * N_PRESSURE_HISTORY
        self._rpm_history = [(0.0, 0.0, 0.0)] * N_RPM_HISTORY
        return self.observation()

    def observation(self) -> np.ndarray:
        """14 values: 5 normalized pressures then 3 normalized RPM triples, oldest first."""
        out = np.empty(OBS_DIM)
        for i, p in enumerate(self._pressure_history):
            out[i] = (p - PRESSURE_CENTER) / PRESSURE_SCALE
        k = N_PRESSURE_HISTORY
        inv = 1.0 / self.variant.max_rpm
        for triple in self._rpm_history:
            for r in triple:
                out[k] = r * inv * 2.0 - 1.0
                k += 1
        return out

    def step(self, action) -> StepResult:
        if self.step_index >= EPISODE_STEPS:
            raise RuntimeError("episode is finished; call reset() before stepping again")
        variant = self.variant
        if self.backup_engaged:
            executed = (variant.max_rpm, variant.max_rpm, variant.max_rpm)
            backup = True
        else:
            executed = map_action(action, variant)
            backup = False

        demand_t = float(self._demand_values[self.step_index])
        new_pressure = physics_update(self.pressure, executed, demand_t, variant)
        e_kj = energy_kj(executed, variant)
        t_kj = turn_on_kj(self.rpms, executed, variant)
        reward = -(e_kj + t_kj)

        self.pressure = new_pressure
        self.rpms = executed
        self.backup_engaged = new_pressure < BACKUP_THRESHOLD
        self.step_index += 1
        self._pressure_history.pop(0)
        self._pressure_history.append(new_pressure)
        self._rpm_history.pop(0)
        self._rpm_history.append(executed)

        info = StepInfo(
            executed_rpm=executed,
            executed_action=action_for_rpm(executed, variant),
            backup=backup,
            demand=demand_t,
            energy_kj=e_kj,
            turn_on_kj=t_kj,
            pressure=new_pressure,
        )
        return StepResult(
            observation=self.observation(),
            reward=reward,
            done=self.step_index >= EPISODE_STEPS,
            info=info,
        )


class TrajectoryLog:
    """Collects per-step rows and writes the trajectory CSV."""

    def __init__(self):
        self.rows = []

    def record(self, step: int, result: StepResult):
        info = result.info
        self.rows.append(
            (
                step,
                repr(info.pressure),
                repr(info.executed_rpm[0]),
                repr(info.executed_rpm[1]),
                repr(info.executed_rpm[2]),
                repr(info.demand),
                repr(result.reward),
                int(info.backup),
            )
        )

    def write(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_COLUMNS)
            writer.writerows(self.rows)


def write_provenance(path, variant: VariantSpec, episode_seed: int):
    """JSON sidecar tying a trajectory to its variant and episode seed."""
    doc = {
        "seed": variant.seed,
        "episode_seed": episode_seed,
        "lambda": variant.lam,
        "flow_coeffs": list(variant.flow_coeffs),
        "tank_volume": variant.tank_volume,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))
