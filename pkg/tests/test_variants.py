import json
from pathlib import Path

import pytest

from tanklab.variants import (
    BASE_RHO_DEFAULT,
    POWER_SCALE_W,
    VariantSpec,
    interpolate_power,
    make_variant,
)

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_variants.json"


def test_lambda_zero_leaves_base_rho():
    v = make_variant(7, 0.0, base_rho=0.05)
    assert v.flow_coeffs == (0.05, 0.05, 0.05)


def test_tank_volume_bounds():
    for seed in range(1, 101):
        v = make_variant(seed, 0.5)
        assert 50.0 <= v.tank_volume < 60.0


def test_different_seeds_differ():
    a = make_variant(1, 0.5)
    b = make_variant(2, 0.5)
    assert a.flow_coeffs != b.flow_coeffs


def test_reproducible_bytes():
    assert make_variant(3, 0.5).to_json() == make_variant(3, 0.5).to_json()


def test_flow_coeff_bounds_at_half_lambda():
    rho = BASE_RHO_DEFAULT
    for seed in range(1, 51):
        v = make_variant(seed, 0.5, base_rho=rho)
        for c in v.flow_coeffs:
            assert rho <= c < 1.5 * rho


def test_power_table_invariants():
    v = make_variant(5, 0.5)
    for table in v.power_tables:
        rpms = [r for r, _ in table]
        watts = [w for _, w in table]
        assert rpms == sorted(rpms) and len(set(rpms)) == len(rpms)
        assert all(w >= 0.0 for w in watts)
        assert table[0] == (0.0, 0.0)


def test_lambda_zero_tops_out_at_power_scale():
    v = make_variant(2, 0.0)
    for i in range(3):
        assert v.power_watts(i, v.max_rpm) == POWER_SCALE_W


def test_power_interpolation_between_entries():
    v = make_variant(2, 0.0)
    # quadratic shape tabulated every 50 RPM, linear in between
    p425 = v.power_watts(0, 425.0)
    expected = 0.5 * (v.power_watts(0, 400.0) + v.power_watts(0, 450.0))
    assert p425 == pytest.approx(expected)
    assert v.power_watts(0, 0.0) == 0.0


def test_interpolate_power_clamps_to_endpoints():
    table = ((0.0, 0.0), (400.0, 100.0), (600.0, 300.0))
    assert interpolate_power(table, 700.0) == 300.0
    assert interpolate_power(table, -5.0) == 0.0


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_variant(0, 0.5)
    with pytest.raises(ValueError):
        make_variant(1, -0.1)
    with pytest.raises(ValueError):
        make_variant(1, 1.0001)
    with pytest.raises(ValueError):
        make_variant(1, 0.5, base_rho=0.0)
    with pytest.raises(ValueError):
        make_variant(1.5, 0.5)
    with pytest.raises(ValueError):
        make_variant(True, 0.5)


def test_json_roundtrip():
    v = make_variant(11, 0.5)
    assert VariantSpec.from_json(v.to_json()) == v


def test_golden_variants_seeds_1_to_17():
    """Draw-order regression: the variant bytes for seeds 1..17 are frozen."""
    golden = json.loads(GOLDEN_PATH.read_text())
    for seed_str, doc in golden.items():
        v = make_variant(int(seed_str), 0.5)
        assert json.loads(v.to_json()) == doc, f"variant drift for seed {seed_str}"
