"""Seeded environment variants: tank volume and per-compressor parameters.

A variant is generated from an integer seed by drawing four uniforms in a
fixed order: tank volume first, then one flow-coefficient perturbation per
compressor. The draw order is part of the on-disk contract (golden variant
files regression-test it), so new fields must append draws, never reorder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .rng import SplitMix64

N_COMPRESSORS = 3
MIN_RPM = 400.0
MAX_RPM = 600.0
BASE_RHO_DEFAULT = 0.05  # normal liters per revolution
POWER_SCALE_W = 2000.0
POWER_TABLE_RPMS = (0.0, 400.0, 450.0, 500.0, 550.0, 600.0)

PowerTable = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class VariantSpec:
    """One seeded instance of the air-tank control problem."""

    seed: int
    lam: float
    base_rho: float
    tank_volume: float  # liters
    flow_coeffs: tuple[float, float, float]  # normal liters per revolution
    power_tables: tuple[PowerTable, PowerTable, PowerTable]
    min_rpm: float = MIN_RPM
    max_rpm: float = MAX_RPM

    def power_watts(self, compressor: int, rpm: float) -> float:
        """Power draw at an RPM, linearly interpolated in the lookup table."""
        return interpolate_power(self.power_tables[compressor], rpm)

    def max_inflow(self) -> float:
        """Combined inflow with all compressors at max speed, in nl/min."""
        return sum(c * self.max_rpm for c in self.flow_coeffs)

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "lambda": self.lam,
            "base_rho": self.base_rho,
            "tank_volume": self.tank_volume,
            "min_rpm": self.min_rpm,
            "max_rpm": self.max_rpm,
            "compressors": [
                {
                    "flow_coeff": self.flow_coeffs[i],
                    "power_table": [list(entry) for entry in self.power_tables[i]],
                }
                for i in range(N_COMPRESSORS)
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "VariantSpec":
        doc = json.loads(text)
        comps = doc["compressors"]
        return cls(
            seed=doc["seed"],
            lam=doc["lambda"],
            base_rho=doc["base_rho"],
            tank_volume=doc["tank_volume"],
            flow_coeffs=tuple(c["flow_coeff"] for c in comps),
            power_tables=tuple(
                tuple(tuple(entry) for entry in c["power_table"]) for c in comps
            ),
            min_rpm=doc["min_rpm"],
            max_rpm=doc["max_rpm"],
        )


def interpolate_power(table: PowerTable, rpm: float) -> float:
    """Piecewise-linear watts lookup; clamps to the table's endpoints."""
    if rpm <= table[0][0]:
        return table[0][1]
    if rpm >= table[-1][0]:
        return table[-1][1]
    for (r0, w0), (r1, w1) in zip(table, table[1:]):
        if rpm <= r1:
            return w0 + (w1 - w0) * (rpm - r0) / (r1 - r0)
    return table[-1][1]


def _power_table(flow_coeff: float, base_rho: float, lam: float) -> PowerTable:
    # Strongest possible compressor for this (base_rho, lam) tops out at
    # POWER_SCALE_W; power grows with the square of speed.
    rho_ceiling = base_rho * (1.0 + lam)
    ratio = flow_coeff / rho_ceiling
    entries = [(0.0, 0.0)]
    for rpm in POWER_TABLE_RPMS[1:]:
        entries.append((rpm, POWER_SCALE_W * ratio * (rpm / MAX_RPM) ** 2))
    return tuple(entries)


def make_variant(seed: int, lam: float, base_rho: float = BASE_RHO_DEFAULT) -> VariantSpec:
    """Build the variant for a seed.

    Draw order (fixed): tank volume, then flow coefficient of compressors
    1..3. Tank volume is 50 + 10*u liters; each flow coefficient is
    base_rho * (1 + lam*u) with an independent u in [0, 1).
    """
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if seed < 1:
        raise ValueError(f"seed must be >= 1, got {seed}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if not base_rho > 0.0:
        raise ValueError(f"base_rho must be positive, got {base_rho}")

    rng = SplitMix64(seed)
    tank_volume = 50.0 + 10.0 * rng.uniform()
    flow_coeffs = tuple(base_rho * (1.0 + lam * rng.uniform()) for _ in range(N_COMPRESSORS))
    power_tables = tuple(_power_table(c, base_rho, lam) for c in flow_coeffs)
    return VariantSpec(
        seed=seed,
        lam=lam,
        base_rho=base_rho,
        tank_volume=tank_volume,
        flow_coeffs=flow_coeffs,
        power_tables=power_tables,
    )
