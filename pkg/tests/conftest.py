"""Shared fixtures: calibrated plans are expensive, so build them once."""

import pytest

from seqnorm.calibrate import calibrate_known, calibrate_unknown
from seqnorm.plan_known import build_known_plan
from seqnorm.plan_unknown import build_unknown_plan

DESIGN = dict(alpha=0.05, beta=0.05, epsilon=0.5, rho=1.0, tau=3)
TAIL_MASS = 1e-4
CELL_BUDGET = 256


@pytest.fixture(scope="session")
def known_calibration():
    return calibrate_known(**DESIGN)


@pytest.fixture(scope="session")
def known_plan(known_calibration):
    plan = build_known_plan(
        gamma=0.0, sigma=1.0, zeta=known_calibration.zeta, **DESIGN
    )
    return plan.with_certified(known_calibration.certified)


@pytest.fixture(scope="session")
def unknown_calibration():
    return calibrate_unknown(**DESIGN, tail_mass=TAIL_MASS, cell_budget=CELL_BUDGET)


@pytest.fixture(scope="session")
def unknown_plan(unknown_calibration):
    plan = build_unknown_plan(gamma=0.0, zeta=unknown_calibration.zeta, **DESIGN)
    return plan.with_certified(unknown_calibration.certified)
