"""Moments of particle ensembles and the elementary inequalities built on them."""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInputError
from .kinematics import bracket

ORDER_TOL = 1e-9


@dataclass
class Ensemble:
    """Equal-weight particle representation of a velocity distribution.

    Each of the N rows of ``velocities`` carries mass ``weight``; the total
    mass is m0 = N * weight.
    """

    velocities: np.ndarray
    weight: float

    def __post_init__(self):
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if len(self.velocities) < 1:
            raise InvalidInputError("ensemble needs at least one particle")
        if not self.weight > 0:
            raise InvalidInputError("particle weight must be positive")
        if not np.all(np.isfinite(self.velocities)):
            raise InvalidInputError("velocities must be finite")

    @classmethod
    def from_mass(cls, velocities, m0=1.0):
        velocities = np.atleast_2d(velocities)
        return cls(velocities, m0 / len(velocities))

    @property
    def n(self):
        return len(self.velocities)

    @property
    def d(self):
        return self.velocities.shape[1]

    @property
    def mass(self):
        return self.n * self.weight

    def momentum(self):
        return self.weight * self.velocities.sum(axis=0)

    def brackets(self):
        return bracket(self.velocities)

    def copy(self):
        return Ensemble(self.velocities.copy(), self.weight)


def moment(e, k, brackets=None):
    """Polynomial moment m_k = w * sum <v_i>^k."""
    if not np.isfinite(k):
        raise InvalidInputError("moment order must be finite")
    if k == 0:
        return float(e.mass)
    b = e.brackets() if brackets is None else brackets
    return float(e.weight * np.sum(b ** k))


@dataclass
class MomentVector:
    """Moments m_k at a set of orders."""

    orders: np.ndarray
    values: np.ndarray

    def get(self, k):
        idx = np.flatnonzero(np.abs(self.orders - k) <= ORDER_TOL)
        if not len(idx):
            raise InvalidInputError(f"moment of order {k} is not available")
        return float(self.values[idx[0]])

    def __call__(self, k):
        return self.get(k)


def moments(e, orders):
    """:class:`MomentVector` of ``e`` at ``orders``."""
    orders = np.asarray(sorted(set(float(k) for k in orders)))
    b = e.brackets()
    return MomentVector(orders, np.array([moment(e, k, b) for k in orders]))


def interpolation_bound(m_s1, m_s2, s1, s, s2):
    """Upper bound m_{s1}^tau m_{s2}^{1-tau} for m_s with s = tau s1 + (1-tau) s2."""
    if not s1 <= s <= s2:
        raise InvalidInputError("interpolation needs s1 <= s <= s2")
    if s1 == s2:
        return float(m_s1)
    tau = (s2 - s) / (s2 - s1)
    return float(m_s1 ** tau * m_s2 ** (1.0 - tau))


@dataclass
class Witness:
    """Both sides of a checked inequality lhs <= rhs."""

    lhs: float
    rhs: float

    @property
    def holds(self):
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-300


def product_order_bound(e, i, j, k, l):
    """Witness for m_i m_j <= m_k m_l when i + j = k + l and min(k,l) <= min(i,j)."""
    if abs((i + j) - (k + l)) > ORDER_TOL or min(k, l) > min(i, j) + ORDER_TOL:
        raise InvalidInputError("need i + j = k + l and min(k, l) <= min(i, j)")
    b = e.brackets()
    return Witness(moment(e, i, b) * moment(e, j, b), moment(e, k, b) * moment(e, l, b))


def psi_approx(x, n, k):
    """C^1 convex minorant of x^{k/2}: exact up to n, tangent line beyond."""
    if k <= 2:
        raise InvalidInputError("psi_approx needs k > 2")
    x = np.asarray(x, dtype=float)
    h = 0.5 * k
    slope = h * n ** (h - 1.0)
    tangent = slope * x + n ** h - n * slope
    return np.where(x <= n, np.abs(x) ** h, tangent)


def c2p(p):
    """C_{2,p} = p max{1, 2^{p-3}}."""
    return p * max(1.0, 2.0 ** (p - 3.0))


def c3p(p, printed=False):
    """C_{3,p} = C_{2,p} + p(p-1)/2 max{1, 3^{p-4}}.

    The three-term power bound (r+s+t)^{p-3} <= B (r^{p-3}+s^{p-3}+t^{p-3})
    needs B = max{1, 3^{p-4}}; the two-term factor max{1, 2^{p-4}}
    (``printed=True``) is too small for p > 4, e.g. x = y = z = 1, p = 10.
    The two agree for p <= 4.
    """
    base = 2.0 if printed else 3.0
    return c2p(p) + 0.5 * p * (p - 1.0) * max(1.0, base ** (p - 4.0))


def polynomial_gap_bound(p, x, y, z=None):
    """(gap, bound) for the binomial or trinomial expansion remainder.

    Binary: gap = (x+y)^p - x^p - y^p <= C_{2,p}(x^{p-1} y + x y^{p-1}).
    Ternary: gap = (x+y+z)^p - x^p - y^p - z^p <= C_{3,p} sum_{i != j} a_i^{p-1} a_j.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if z is None:
        if p <= 1:
            raise InvalidInputError("binary gap bound needs p > 1")
        gap = (x + y) ** p - x ** p - y ** p
        return gap, c2p(p) * (x ** (p - 1) * y + x * y ** (p - 1))
    if p <= 2:
        raise InvalidInputError("ternary gap bound needs p > 2")
    z = np.asarray(z, dtype=float)
    a = (x, y, z)
    gap = (x + y + z) ** p - x ** p - y ** p - z ** p
    mixed = sum(a[i] ** (p - 1) * a[j] for i in range(3) for j in range(3) if i != j)
    return gap, c3p(p) * mixed


def power_sum_bound(p, x, y, z=None):
    """(lhs, rhs) of (x+y)^p <= max{1,2^{p-1}}(x^p+y^p) or its three-term form."""
    if z is None:
        return (x + y) ** p, np.maximum(1.0, 2.0 ** (p - 1)) * (x ** p + y ** p)
    return (x + y + z) ** p, np.maximum(1.0, 3.0 ** (p - 1)) * (x ** p + y ** p + z ** p)


def convex_dilation_gap(psi, mu, x):
    """mu psi(x) - psi(mu x), nonnegative for convex psi with psi(0) = 0 and mu in [0,1]."""
    return mu * psi(x) - psi(mu * x)


def exp_partial_sums(e, s, z, n, shift=0.0):
    """Sum_{p=0}^{n} m_{sp+shift} z^p / p!, with terms formed in log space."""
    if not 0 < s <= 2:
        raise InvalidInputError("exponential order s must lie in (0, 2]")
    if n < 0 or z < 0:
        raise InvalidInputError("need n >= 0 and z >= 0")
    b = e.brackets()
    logs = np.array([np.log(moment(e, s * p + shift, b)) for p in range(n + 1)])
    return _series(logs, z, n)


def _series(log_m, z, n):
    p = np.arange(n + 1)
    if z == 0:
        return float(np.exp(log_m[0]))
    return float(np.sum(np.exp(log_m + p * np.log(z) - gammaln(p + 1))))


def exp_partial_sums_from(m, s, z, n, shift=0.0):
    """As :func:`exp_partial_sums` for a moment lookup ``m(order)``."""
    total = 0.0
    for p in range(n + 1):
        total += m(s * p + shift) * np.exp(p * np.log(z) - gammaln(p + 1)) if z > 0 else (
            m(shift) if p == 0 else 0.0)
    return float(total)


def _multinomial(p, ks):
    return float(np.exp(gammaln(p + 1) - sum(gammaln(k + 1) for k in ks)))


def povzner_sums(m, p, s, gamma_tilde):
    """(S2, S3) sums built from the moment lookup ``m(order)``.

    S2 runs over 0 < k, k1 < p with k + k1 = p of C(p; k, k1) m_{sk+g} m_{sk1};
    S3 over 0 <= k, k1, k2 < p with sum p of C(p; k, k1, k2) m_{sk+g} m_{sk1} m_{sk2}.
    """
    if int(p) != p or p < 0:
        raise InvalidInputError("p must be a nonnegative integer")
    p = int(p)
    s2 = sum(_multinomial(p, (k, p - k)) * m(s * k + gamma_tilde) * m(s * (p - k))
             for k in range(1, p))
    s3 = 0.0
    for k in range(p):
        for k1 in range(p - k + 1):
            k2 = p - k - k1
            if k1 < p and k2 < p:
                s3 += (_multinomial(p, (k, k1, k2)) * m(s * k + gamma_tilde)
                       * m(s * k1) * m(s * k2))
    return float(s2), float(s3)


def povzner_sums_bruteforce(m, p, s, gamma_tilde):
    """Reference enumeration of :func:`povzner_sums` over all index tuples."""
    s2 = 0.0
    for k, k1 in itertools.product(range(p + 1), repeat=2):
        if k + k1 == p and 0 < k < p and 0 < k1 < p:
            s2 += _multinomial(p, (k, k1)) * m(s * k + gamma_tilde) * m(s * k1)
    s3 = 0.0
    for k, k1, k2 in itertools.product(range(p + 1), repeat=3):
        if k + k1 + k2 == p and max(k, k1, k2) < p:
            s3 += _multinomial(p, (k, k1, k2)) * m(s * k + gamma_tilde) * m(s * k1) * m(s * k2)
    return s2, s3


@dataclass
class SeriesWitness:
    """Both sides of the two partial-sum inequalities."""

    lhs2: float
    rhs2: float
    lhs3: float
    rhs3: float

    @property
    def holds(self):
        tol = 1e-12
        return (self.lhs2 <= self.rhs2 * (1 + tol) + 1e-300
                and self.lhs3 <= self.rhs3 * (1 + tol) + 1e-300)


def series_bound_check(m, s, gamma_tilde, z, n, p0):
    """Check sum_{p=p0}^{n} z^p/p! S2^p <= I E and the S3 form <= I E^2.

    E = sum_{p<=n} m_{sp} z^p/p! and I = sum_{p<=n} m_{sp+g} z^p/p! are built
    from the same lookup ``m``.
    """
    E = exp_partial_sums_from(m, s, z, n)
    I = exp_partial_sums_from(m, s, z, n, gamma_tilde)
    lhs2 = lhs3 = 0.0
    for p in range(p0, n + 1):
        fac = np.exp(p * np.log(z) - gammaln(p + 1)) if z > 0 else float(p == 0)
        s2, s3 = povzner_sums(m, p, s, gamma_tilde)
        lhs2 += fac * s2
        lhs3 += fac * s3
    return SeriesWitness(lhs2, I * E, lhs3, I * E * E)
