"""Shared fixtures: small simulation bundles reused across test modules.

Heavy Monte Carlo lives in test_acceptance.py; everything here is sized to
keep the module-level suites fast.
"""

from __future__ import annotations

import pytest

from hypescape import PRESETS, SimConfig, simulate_bm1d, simulate_radial

MEDIUM = PRESETS["medium"]


@pytest.fixture(scope="session")
def paired_d3_w500():
    """400 radial paths, d=3, horizon 500, medium steps; shared read-only."""
    config = SimConfig(d=3, horizon=500.0, path_count=400, seed=42,
                       step_rule=MEDIUM)
    return simulate_radial(config)


@pytest.fixture(scope="session")
def bm_w5000():
    """2000 driving-noise-only paths out to horizon 5000, medium steps."""
    config = SimConfig(d=2, horizon=5000.0, path_count=2000, seed=7,
                       step_rule=MEDIUM)
    return simulate_bm1d(config)
