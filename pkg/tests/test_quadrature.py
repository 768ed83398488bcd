"""Adaptive Simpson integrator against scipy.integrate.quad as oracle."""

import math

import pytest
from scipy.integrate import quad

from spingate.quadrature import adaptive_simpson


@pytest.mark.parametrize(
    "f, a, b",
    [
        (lambda t: math.exp(-t / 12.0), 0.0, 50.0),
        (lambda t: math.exp(-t / 1.7), 0.0, 50.0),
        (lambda t: math.sin(t) ** 2 + 0.5, 0.0, 7.0),
        (lambda t: 1.0 / (1.0 + t * t), -3.0, 5.0),
        (lambda t: t * math.exp(-t), 0.0, 30.0),
    ],
)
def test_matches_quad(f, a, b):
    want, _ = quad(f, a, b, epsabs=0.0, epsrel=1e-12)
    got = adaptive_simpson(f, a, b)
    assert got == pytest.approx(want, rel=1e-9)


def test_polynomial_cubic_is_exact():
    # Simpson integrates cubics exactly on a single panel
    got = adaptive_simpson(lambda t: t**3 - 2 * t + 1, -1.0, 2.0)
    want = (2.0**4 / 4 - 2.0**2 + 2.0) - ((-1.0) ** 4 / 4 - 1.0 + -1.0)
    assert got == pytest.approx(want, rel=1e-14)


def test_zero_length_interval():
    assert adaptive_simpson(math.exp, 3.0, 3.0) == 0.0


def test_reversed_interval_rejected():
    with pytest.raises(ValueError, match="invalid integration interval"):
        adaptive_simpson(math.exp, 1.0, 0.0)
