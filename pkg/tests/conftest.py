import math
from pathlib import Path

import pytest

from nicholson_periodic.coeffs import PeriodicCoefficient, harmonic_series
from nicholson_periodic.config import SystemConfig
from nicholson_periodic.model import BirthTerm, MortalityTerm, NicholsonSystem

ROOT = Path(__file__).resolve().parents[1]
EQ16_CONFIG = ROOT / "configs" / "paper_eq16.yaml"
SYMMETRIC_CONFIG = ROOT / "configs" / "symmetric_constant.yaml"
TWO_PI = 2 * math.pi


def constant_system(d11, c11, d12, c12, d21, c21, d22, c22, b1, b2, tau=1.0, omega=TWO_PI):
    C = lambda v: PeriodicCoefficient.constant(v, omega)
    return NicholsonSystem(
        MortalityTerm(C(d11), C(c11)),
        MortalityTerm(C(d12), C(c12)),
        MortalityTerm(C(d21), C(c21)),
        MortalityTerm(C(d22), C(c22)),
        (BirthTerm(C(b1), C(tau)),),
        (BirthTerm(C(b2), C(tau)),),
        omega,
    )


def eq16_direct(alpha, beta):
    """The example system assembled by hand, independent of the YAML loader."""
    C = PeriodicCoefficient.constant
    return NicholsonSystem(
        MortalityTerm(harmonic_series(5, [(0.25, 1, "sin")]), C(4)),
        MortalityTerm(harmonic_series(2, [(0.25, 1, "cos")]), C(2)),
        MortalityTerm(harmonic_series(2, [(0.5, 1, "sin")]), C(3)),
        MortalityTerm(harmonic_series(4, [(0.5, 1, "cos")]), C(4)),
        (BirthTerm(harmonic_series(alpha, [(0.5 * alpha, 1, "cos")]), C(7)),),
        (BirthTerm(harmonic_series(beta, [(0.25 * beta, 1, "cos")]), C(7)),),
        TWO_PI,
    )


@pytest.fixture(scope="session")
def eq16_config():
    return SystemConfig.load(EQ16_CONFIG)


@pytest.fixture(scope="session")
def eq16(eq16_config):
    def build(alpha=2.0, beta=2.0):
        return eq16_config.build({"alpha": alpha, "beta": beta})

    return build


@pytest.fixture(scope="session")
def symmetric_system():
    # autonomous; positive equilibrium solves e^u = 2 (1 + u)
    return constant_system(2, 1, 1, 1, 1, 1, 2, 1, 2, 2, tau=1.0)
