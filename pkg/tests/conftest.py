"""Shared independent oracles for the test suite.

These deliberately avoid the package's own code paths: quadrature against
scipy's gamma density, and a vectorized chain-binomial SIR scheme drawn from
numpy's default generator.
"""

import math

import numpy as np
from scipy import integrate
from scipy.stats import gamma as gamma_law


def gamma_mixture_quadrature(l: float, k: int, tau: float) -> float:
    """Numerical E[R^k e^-R] / k! for R ~ gamma with mean l, variance l*tau."""
    shape = l / tau

    def integrand(r):
        return r**k * math.exp(-r) / math.factorial(k) * gamma_law.pdf(r, shape, scale=tau)

    value, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
    return value


def euler_binomial_sir(
    n_reps: int,
    population: int,
    contact_rate: float,
    recovery_rate: float,
    step: float,
    initial_s: int,
    initial_i: int,
    t_end: float,
    seed: int,
):
    """Classical chain-binomial SIR, vectorized across replicates.

    Per step, exits are binomial with probability 1 - e^(-rate * step), the
    infection rate frozen at the step's start.  Returns the final (S, I, R)
    arrays.
    """
    rng = np.random.default_rng(seed)
    s = np.full(n_reps, initial_s, dtype=np.int64)
    i = np.full(n_reps, initial_i, dtype=np.int64)
    r = np.full(n_reps, population - initial_s - initial_i, dtype=np.int64)
    n_steps = math.ceil(t_end / step)
    elapsed = 0.0
    for idx in range(n_steps):
        duration = min(step, t_end - elapsed)
        elapsed += duration
        p_si = -np.expm1(-contact_rate * i / population * duration)
        p_ir = -np.expm1(-recovery_rate * duration)
        new_si = rng.binomial(s, p_si)
        new_ir = rng.binomial(i, p_ir)
        s -= new_si
        i += new_si - new_ir
        r += new_ir
    return s, i, r
