import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from attnalloc import model as M
from attnalloc.model import ModelParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MILD = ModelParams(1.0, 0.9, -0.9, -0.9, 1.0, 0.0, 0.3)
SKEW = ModelParams(1.0, 0.8, -1.0, -0.8, 1.0, 0.0, 0.3)
SYM = ModelParams(1.0, 1.0, -1.0, -1.0, 1.0, 0.0, 0.3)


@pytest.fixture
def skew():
    return SKEW


def draw_params(rng, regime=None, rho_zero=None):
    """Random valid parameters; ``regime`` forces the cost into one band."""
    while True:
        uRR, uLL = rng.uniform(0.3, 2.0, 2)
        uLR = rng.uniform(-2.0, 0.8 * uRR)
        uRL = rng.uniform(-2.0, 0.8 * uLL)
        lam = rng.uniform(0.5, 2.0)
        zero = rng.random() < 0.4 if rho_zero is None else rho_zero
        rho = 0.0 if zero else rng.uniform(0.01, 0.5)
        base = ModelParams(uRR, uLL, uLR, uRL, lam, rho, 1.0)
        if M.validate_params(base.replace(c=0.01)):
            continue
        cb = M.c_bar(base)
        if cb < 0.05:
            continue
        cu = M.c_underbar(base.replace(c=0.5 * cb))
        band = regime or rng.choice(["OwnAndOpposite", "OwnOnly", "NoLearning"])
        if band == "OwnAndOpposite":
            if cu < 0.03:
                continue
            c = rng.uniform(0.15, 0.9) * cu
        elif band == "OwnOnly":
            c = cu + rng.uniform(0.1, 0.9) * (cb - cu)
        else:
            c = cb * rng.uniform(1.05, 1.5)
        p = base.replace(c=c)
        if not M.validate_params(p) and M.regime_cutoffs(p).regime.value == band:
            return p


@st.composite
def params_st(draw, regime=None):
    seed = draw(st.integers(0, 2**32 - 1))
    return draw_params(np.random.default_rng(seed), regime)


@st.composite
def learning_params_st(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return draw_params(rng, rng.choice(["OwnAndOpposite", "OwnOnly"]))


def central_diff(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def is_close(a, b, tol):
    return abs(a - b) <= tol or (math.isinf(a) and a == b)
