#!/usr/bin/env python3
"""High-precision reference values for the frozen tests.

Every quantity is computed from its definition with mpmath at 50 digits,
independently of the Rust quadrature, root finding and glue code. Run
`python3 tools/oracle_values.py` and paste the output into
crates/core/tests/oracle_values.rs when a definition changes.
"""

import mpmath as mp

mp.mp.dps = 50

T, TAU1, TAU2 = mp.mpf(1), mp.mpf("0.25"), mp.mpf("0.5")
BETA, GAMMA = mp.mpf(2), mp.mpf(1000)
PREFIX = 64


def f(t):
    return mp.exp(1 / (t - TAU1)) if t < TAU1 else mp.mpf(0)


def f_prime_abs(t):
    u = TAU1 - t
    return mp.exp(-1 / u) / u**2


def a_seq(n):
    return 1 / mp.log(n + 1)


def delta_seq(n):
    return min(mp.mpf(1), mp.mpf(2) / n) * TAU1 / 2


# |f'|(t) = exp(-1/u)/u^2 with u = tau1 - t is increasing in u on (0, 1/2),
# so the infimum over [0, tau1/2] sits at t = tau1/2.
alpha_grid = min(f_prime_abs(mp.mpf(k) * TAU1 / 2 / 2000) for k in range(2001)) ** 2
alpha = f_prime_abs(TAU1 / 2) ** 2
assert abs(alpha - alpha_grid) < mp.mpf("1e-40")

damp = mp.exp(-mp.pi**2 / 4)
c1 = GAMMA * damp * mp.exp(-1 / BETA) / (8 * mp.pi * mp.sqrt(2 * mp.pi * BETA))
c2 = GAMMA * damp / (4 * mp.pi)

n0 = next(n for n in range(1, PREFIX + 1) if a_seq(n) + c2 / n <= c1)


def knot_level(n):
    d = min(delta_seq(n), TAU1 / 2)
    return (1 + mp.sqrt(96 / (alpha * d**3))) * mp.mpf(n) ** 3


def knot(n):
    b = mp.sqrt(-BETA * mp.log((a_seq(n) + c2 / n) / c1))
    return b, knot_level(n)


b0, d0 = knot(n0)


def psi_left(x):
    return d0 * (1 - mp.exp(1 / (x - b0)))


def psi_left_inv(y):
    return b0 + 1 / mp.log(1 - y / d0)


def raw_bound(n):
    """Bound at N < N0, where D_N falls in the left tail of psi."""
    x = psi_left_inv(knot_level(n))
    return c1 * mp.exp(-x**2 / BETA) - c2 / n


def sine_moment(a, tau):
    dens = lambda z: mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi)
    zeros = [(k * mp.pi - a) / tau for k in range(-200, 201)]
    cuts = sorted([mp.mpf(-12)] + [z for z in zeros if -12 < z < 12] + [mp.mpf(12)])
    return mp.fsum(mp.quad(lambda z: abs(mp.sin(a + tau * z)) * dens(z), [c, d]) for c, d in zip(cuts, cuts[1:]))


def gap_variance(lo, hi):
    """Var of the integral of f' against a Brownian bridge pinned at lo, hi."""
    mean = mp.quad(f, [lo, hi]) / (hi - lo)
    return mp.quad(lambda t: (f(t) - mean) ** 2, [lo, hi])


def emit(name, value):
    print(f"pub const {name}: f64 = {mp.nstr(value, 17, strip_zeros=False)};")


emit("ALPHA", alpha)
emit("C1", c1)
emit("C2", c2)
print(f"pub const N0: usize = {n0};")
print("pub const KNOTS: [(usize, f64, f64); 11] = [")
for n in range(n0, n0 + 11):
    b, d = knot(n)
    print(f"    ({n}, {mp.nstr(b, 17)}, {mp.nstr(d, 17)}),")
print("];")
emit("PSI_FAR_LEFT", psi_left(b0 - 1000))
emit("BOUND_N0_PLUS_3", a_seq(n0 + 3))
emit("RAW_BOUND_N20", raw_bound(20))
emit("KAPPA", a_seq(n0) / a_seq(1))
emit("SINE_BOUND", mp.exp(-mp.pi**2 / 8) / mp.sqrt(8 * mp.pi))
print("pub const SINE_MOMENTS: [(f64, f64, f64); 4] = [")
for a, tau in [(0, 1), ("1.3", 2), (-7, 5), (10, 50)]:
    print(f"    ({a}.0, {tau}.0, {mp.nstr(sine_moment(mp.mpf(a), mp.mpf(tau)), 17)}),".replace("1.3.0", "1.3"))
print("];")
emit("F_SQUARED_INTEGRAL", mp.quad(lambda t: f(t) ** 2, [0, TAU1]))
emit("GAP_VARIANCE_HALF", gap_variance(mp.mpf(0), TAU1 / 2))
emit("GAP_VARIANCE_INNER", gap_variance(mp.mpf("0.05"), mp.mpf("0.1")))
