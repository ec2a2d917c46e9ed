"""Coordinate laws: exact moments, samplers, psi_alpha norms, tail bounds.

Every law is centered with unit variance; standardization is built into the
tag semantics (gamma+:nu is (X - nu)/sqrt(nu) with X ~ Gamma(nu, 1), and so
on).  Moments come from cumulant recursions, cross-checked by quadrature.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .errors import ConfigError

GAUSSIAN = "gaussian"
GAMMA_PLUS = "gamma+"
GAMMA_MINUS = "gamma-"
POISSON_STD = "poisson"
RADEMACHER = "rademacher"
TWO_POINT = "twopoint"
CUSTOM = "custom"

DEFAULT_MOMENT_ORDER = 16


def _moments_from_cumulants(kappa):
    """Raw moments m_0..m_K from cumulants kappa[1..K] (kappa[0] unused)."""
    K = len(kappa) - 1
    m = [1.0] + [0.0] * K
    for n in range(1, K + 1):
        m[n] = sum(math.comb(n - 1, j - 1) * kappa[j] * m[n - j] for j in range(1, n + 1))
    return m


@dataclass(frozen=True)
class MomentTable:
    """Exact raw moments m_k = E[X^k], k = 0..order."""

    moments: tuple

    @property
    def order(self):
        return len(self.moments) - 1

    def __call__(self, k):
        if not 0 <= k <= self.order:
            raise ValueError(f"moment order {k} outside 0..{self.order}")
        return self.moments[k]


@dataclass(frozen=True)
class VariableSpec:
    """One coordinate law (tag + parameters), with a cached moment table."""

    law: str
    params: tuple = ()
    _table: MomentTable = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_table", self._build_table(DEFAULT_MOMENT_ORDER))

    def _build_table(self, order):
        law, p = self.law, self.params
        if law == GAUSSIAN:
            kap = [0.0, 0.0, 1.0] + [0.0] * (order - 2)
        elif law in (GAMMA_PLUS, GAMMA_MINUS):
            (nu,) = p
            if nu <= 0:
                raise ConfigError(f"gamma shape must be positive, got {nu}")
            sign = 1.0 if law == GAMMA_PLUS else -1.0
            kap = [0.0, 0.0] + [
                sign**n * math.factorial(n - 1) * nu ** (1 - n / 2) for n in range(2, order + 1)
            ]
        elif law == POISSON_STD:
            (lam,) = p
            if lam <= 0:
                raise ConfigError(f"poisson intensity must be positive, got {lam}")
            kap = [0.0, 0.0] + [lam ** (1 - n / 2) for n in range(2, order + 1)]
        elif law == RADEMACHER:
            return MomentTable(tuple(1.0 if k % 2 == 0 else 0.0 for k in range(order + 1)))
        elif law == TWO_POINT:
            a, b, prob = p
            if not 0 < prob < 1:
                raise ConfigError(f"two-point probability must lie in (0,1), got {prob}")
            mom = [prob * a**k + (1 - prob) * b**k for k in range(order + 1)]
            if abs(mom[1]) > 1e-9 or abs(mom[2] - 1) > 1e-9:
                raise ConfigError(
                    f"two-point law ({a},{b},{prob}) is not centered with unit variance"
                )
            return MomentTable(tuple(mom))
        elif law == CUSTOM:
            mom = list(p)
            if not mom or mom[0] != 1.0:
                raise ConfigError("custom moments must start with m_0 = 1")
            if abs(mom[1]) > 1e-9 or abs(mom[2] - 1) > 1e-9:
                raise ConfigError("custom moments must have m_1 = 0, m_2 = 1")
            return MomentTable(tuple(float(x) for x in mom))
        else:
            raise ConfigError(f"unknown law tag {law!r}")
        return MomentTable(tuple(_moments_from_cumulants(kap)))

    @property
    def table(self):
        return self._table

    def moment(self, k):
        """Exact k-th raw moment."""
        if k > self._table.order:
            # rebuild a longer table on demand
            return self._build_table(k)(k)
        return self._table(k)

    @property
    def third_moment(self):
        return self.moment(3)

    @property
    def fourth_moment(self):
        return self.moment(4)

    def sample(self, rng, n):
        """n i.i.d. draws using the supplied numpy Generator."""
        if n < 1:
            raise ValueError("sample size must be >= 1")
        law, p = self.law, self.params
        if law == GAUSSIAN:
            return rng.standard_normal(n)
        if law in (GAMMA_PLUS, GAMMA_MINUS):
            (nu,) = p
            y = (rng.gamma(nu, 1.0, size=n) - nu) / math.sqrt(nu)
            return y if law == GAMMA_PLUS else -y
        if law == POISSON_STD:
            (lam,) = p
            return (rng.poisson(lam, size=n) - lam) / math.sqrt(lam)
        if law == RADEMACHER:
            return rng.integers(0, 2, size=n) * 2.0 - 1.0
        if law == TWO_POINT:
            a, b, prob = p
            return np.where(rng.random(n) < prob, a, b)
        raise ConfigError(f"law {law!r} has no sampler")

    def __str__(self):
        return law_to_str(self)


def gaussian_spec():
    return VariableSpec(GAUSSIAN)


def rademacher_spec():
    return VariableSpec(RADEMACHER)


def gamma_plus_spec(nu):
    return VariableSpec(GAMMA_PLUS, (float(nu),))


def gamma_minus_spec(nu):
    return VariableSpec(GAMMA_MINUS, (float(nu),))


def poisson_spec(lam):
    return VariableSpec(POISSON_STD, (float(lam),))


def two_point_spec(a, b, prob):
    return VariableSpec(TWO_POINT, (float(a), float(b), float(prob)))


def multiplier_two_point_spec():
    """The bounded law with E[X] = 0, E[X^2] = E[X^3] = 1 used for multipliers."""
    r5 = math.sqrt(5.0)
    return two_point_spec((1 + r5) / 2, (1 - r5) / 2, (r5 - 1) / (2 * r5))


def match_third_moment(s):
    """Normal/gamma spec with E[Y]=0, E[Y^2]=1 and E[Y^3]=s."""
    s = float(s)
    if s == 0.0:
        return gaussian_spec()
    nu = 4.0 / s**2
    return gamma_plus_spec(nu) if s > 0 else gamma_minus_spec(nu)


def moment(spec, k):
    return spec.moment(k)


def sample(spec, rng, n):
    return spec.sample(rng, n)


# -- law string grammar -------------------------------------------------------

def parse_law(text):
    """Parse `gaussian | gamma+:<nu> | gamma-:<nu> | poisson:<lambda> |
    rademacher | twopoint:<a>,<b>,<p>`."""
    s = text.strip()
    if s == GAUSSIAN:
        return gaussian_spec()
    if s == RADEMACHER:
        return rademacher_spec()
    tag, sep, rest = s.partition(":")
    if not sep:
        raise ConfigError(f"bad law string {text!r}: expected "
                          "gaussian | gamma+:<nu> | gamma-:<nu> | poisson:<lambda> | "
                          "rademacher | twopoint:<a>,<b>,<p>")
    try:
        if tag == GAMMA_PLUS:
            return gamma_plus_spec(float(rest))
        if tag == GAMMA_MINUS:
            return gamma_minus_spec(float(rest))
        if tag == POISSON_STD:
            return poisson_spec(float(rest))
        if tag == TWO_POINT:
            a, b, prob = (float(x) for x in rest.split(","))
            return two_point_spec(a, b, prob)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad law parameters in {text!r}") from None
    raise ConfigError(f"unknown law {tag!r} in {text!r}")


def law_to_str(spec):
    if spec.law == GAUSSIAN:
        return GAUSSIAN
    if spec.law == RADEMACHER:
        return RADEMACHER
    if spec.law in (GAMMA_PLUS, GAMMA_MINUS, POISSON_STD):
        return f"{spec.law}:{spec.params[0]:g}"
    if spec.law == TWO_POINT:
        a, b, p = spec.params
        return f"twopoint:{a!r},{b!r},{p!r}"
    raise ConfigError(f"law {spec.law!r} has no string form")


# -- psi_alpha machinery -------------------------------------------------------

_EXP_CLIP = 700.0  # keeps the divergent-c region finite so bracketing stays simple
_HUGE = math.exp(_EXP_CLIP)


def _cexp(arg):
    return math.exp(min(arg, _EXP_CLIP))


def _psi_expectation(spec, c, alpha):
    """E[exp((|X|/c)^alpha)] - 1, by closed form, quadrature or series.

    Values in the divergent-c region are clipped to a huge finite number;
    that preserves monotonicity in c, which is all root bracketing needs.
    """
    law, p = spec.law, spec.params
    if law == GAUSSIAN:
        if alpha == 2.0:
            if c * c <= 2.0:
                return _HUGE
            return 1.0 / math.sqrt(1.0 - 2.0 / (c * c)) - 1.0
        val, _ = integrate.quad(
            lambda x: 2.0 * _cexp((x / c) ** alpha - x * x / 2) / math.sqrt(2 * math.pi),
            0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400,
        )
        return val - 1.0
    if law in (GAMMA_PLUS, GAMMA_MINUS):
        (nu,) = p
        sq = math.sqrt(nu)
        if alpha == 1.0 and c <= (1.0 + 1e-12) / sq:
            return _HUGE

        def f(w):
            y = abs(w - nu) / sq
            return _cexp((y / c) ** alpha + (nu - 1) * math.log(w) - w - special.gammaln(nu))

        lo, _ = integrate.quad(f, 0.0, nu, epsabs=1e-13, epsrel=1e-12, limit=400)
        hi, _ = integrate.quad(f, nu, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
        return lo + hi - 1.0
    if law == POISSON_STD:
        (lam,) = p
        sq = math.sqrt(lam)
        total, k = 0.0, 0
        logpk = -lam
        while True:
            y = abs(k - lam) / sq
            total += _cexp(logpk + (y / c) ** alpha)
            if total >= _HUGE:
                return _HUGE
            k += 1
            logpk += math.log(lam) - math.log(k)
            if k > lam and logpk + (abs(k - lam) / sq / c) ** alpha < -40:
                break
        return total - 1.0
    if law == RADEMACHER:
        return _cexp((1.0 / c) ** alpha) - 1.0
    if law == TWO_POINT:
        a, b, prob = p
        return (prob * _cexp((abs(a) / c) ** alpha)
                + (1 - prob) * _cexp((abs(b) / c) ** alpha) - 1.0)
    raise ConfigError(f"psi_alpha norm unsupported for law {law!r}")


def psi_alpha_norm(spec, alpha):
    """Orlicz norm: the root of E[exp((|X|/C)^alpha)] = 2.

    Geometric bracketing plus Brent root finding; E[psi_alpha(|X|/C)] is
    strictly decreasing in C.  Raises ValueError when the defining integral
    diverges for every C (alpha > 2 for Gaussian, alpha > 1 for
    gamma/Poisson).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    law = spec.law
    if law == GAUSSIAN and alpha > 2:
        raise ValueError("gaussian psi_alpha norm diverges for alpha > 2")
    if law in (GAMMA_PLUS, GAMMA_MINUS, POISSON_STD) and alpha > 1:
        raise ValueError(f"{law} psi_alpha norm diverges for alpha > 1")
    if law == RADEMACHER:
        return math.log(2.0) ** (-1.0 / alpha)

    def h(c):
        return _psi_expectation(spec, c, alpha) - 1.0

    hi = 1.0
    for _ in range(200):
        if h(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket the psi_alpha root from above")
    lo = hi
    for _ in range(400):
        lo /= 1.5
        if h(lo) > 0:
            break
    else:
        raise ValueError("failed to bracket the psi_alpha root from below")
    return float(optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-12, maxiter=300))


def abs_tail(spec, x):
    """P(|X| >= x), from the analytic law."""
    if x <= 0:
        return 1.0
    law, p = spec.law, spec.params
    if law == GAUSSIAN:
        return float(special.erfc(x / math.sqrt(2.0)))
    if law in (GAMMA_PLUS, GAMMA_MINUS):
        (nu,) = p
        sq = math.sqrt(nu)
        upper = float(special.gammaincc(nu, nu + sq * x))
        lower = float(special.gammainc(nu, max(nu - sq * x, 0.0))) if nu - sq * x > 0 else 0.0
        return upper + lower
    if law == POISSON_STD:
        (lam,) = p
        sq = math.sqrt(lam)
        hi = math.ceil(lam + sq * x)              # P >= lam + sq*x  <=>  P >= hi
        lo = math.floor(lam - sq * x)
        tail = float(special.pdtrc(hi - 1, lam))
        head = float(special.pdtr(lo, lam)) if lo >= 0 else 0.0
        return min(tail + head, 1.0)
    if law == RADEMACHER:
        return 1.0 if x <= 1.0 else 0.0
    if law == TWO_POINT:
        a, b, prob = p
        return prob * (abs(a) >= x) + (1 - prob) * (abs(b) >= x)
    raise ConfigError(f"tail unsupported for law {law!r}")


def tail_bound_check(spec, alpha, x):
    """(tail, bound) with tail = P(|X| >= x) and bound = 2 exp(-(x/norm)^alpha)."""
    nrm = psi_alpha_norm(spec, alpha)
    return abs_tail(spec, x), 2.0 * math.exp(-((x / nrm) ** alpha))


def psi_moment_constant(alpha):
    """c_alpha in the moment-growth bound |X|_p <= c_alpha |X|_psi_alpha p^{1/alpha}."""
    return (math.exp(1 / (2 * math.e) - 1 / alpha) * alpha ** (-1 / alpha)
            * max(1.0, 2 * math.sqrt(2 * math.pi / alpha) * math.exp(alpha / 12)))


@lru_cache(maxsize=None)
def _cached_psi_norm(law, params, alpha):
    return psi_alpha_norm(VariableSpec(law, params), alpha)


def psi_norm_cached(spec, alpha):
    return _cached_psi_norm(spec.law, spec.params, float(alpha))
