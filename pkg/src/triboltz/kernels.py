"""Collision cross-sections, angular cutoff norms and potential envelopes."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .errors import DegenerateConfigurationError, InvalidInputError, NumericalFailureError
from .kinematics import bracket, u_tilde_norm
from .sphere import double_sphere_rule, sphere_area


@dataclass(frozen=True)
class Profile:
    """Polynomial angular profile p(z) = sum_j coeffs[j] z^j on [-zmax, zmax].

    ``sup`` is the declared bound on |p| over the domain; when omitted it is
    computed on a fine grid.
    """

    coeffs: tuple = (1.0,)
    zmax: float = 1.0
    sup: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise InvalidInputError("profile needs at least one coefficient")
        z = np.linspace(-self.zmax, self.zmax, 4001)
        vals = self(z)
        if np.any(vals < -1e-14):
            raise InvalidInputError("angular profile must be nonnegative")
        if self.sup is None:
            object.__setattr__(self, "sup", float(np.max(np.abs(vals))))
        elif self.sup < np.max(np.abs(vals)) - 1e-12:
            raise InvalidInputError("declared profile sup bound is too small")

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=float), self.coeffs)

    @property
    def is_even(self):
        return all(c == 0.0 for c in self.coeffs[1::2])

    @property
    def is_constant(self):
        return all(c == 0.0 for c in self.coeffs[1:])


@dataclass(frozen=True)
class KernelConfig:
    """Parameters of the binary and ternary cross-sections.

    B2 = |u|^gamma2 b2(u_hat . omega) and
    B3 = |u~|^(gamma3 - theta3) |U|^theta3 |U_hat . omega|^theta3 phi(omega1 . omega2).
    """

    d: int = 2
    gamma2: float = 1.0
    gamma3: float = 1.0
    theta3: float = 0.0
    b2: Profile = field(default_factory=Profile)
    phi: Profile = field(default_factory=lambda: Profile(zmax=0.5))

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise InvalidInputError("dimension d must be an integer >= 2")
        for name in ("gamma2", "gamma3"):
            g = getattr(self, name)
            if not 0.0 <= g <= 2.0:
                raise InvalidInputError(f"{name} must lie in [0, 2] (hard potentials with cutoff)")
        if max(self.gamma2, self.gamma3) <= 0.0:
            raise InvalidInputError("gamma = max(gamma2, gamma3) must be strictly positive")
        if self.theta3 < 0.0:
            raise InvalidInputError("theta3 must be nonnegative")
        if not self.b2.is_even:
            raise InvalidInputError("binary angular profile b2 must be even")
        if self.phi.zmax != 0.5:
            raise InvalidInputError("phi is defined on [-1/2, 1/2]")

    @property
    def gamma(self):
        return max(self.gamma2, self.gamma3)

    def b3(self, x, y):
        return np.abs(x) ** self.theta3 * self.phi(y)

    def to_dict(self):
        return {
            "d": self.d, "gamma2": self.gamma2, "gamma3": self.gamma3,
            "theta3": self.theta3, "b2": list(self.b2.coeffs), "phi": list(self.phi.coeffs),
        }

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Quadrature:
    """Resolution of the angular product rules.

    ``n_binary`` is the node count of the one-dimensional cutoff rule;
    ``n_circle`` gives 2n points per angle for binary integrals on S^{d-1};
    ``n_sphere`` does the same for each factor of the double-polar rule on
    S^{2d-1}, whose polar angle uses ``n_theta`` nodes.
    """

    n_binary: int = 48
    n_circle: int = 48
    n_theta: int = 10
    n_sphere: int = 12

    @classmethod
    def default(cls, d):
        return cls(n_theta=24) if d == 2 else cls(n_circle=24, n_theta=16, n_sphere=6)


def binary_kernel(cfg, u, omega):
    """|u|^gamma2 b2(u_hat . omega), broadcasting over leading axes."""
    nu = np.linalg.norm(u, axis=-1)
    safe = np.where(nu > 0, nu, 1.0)
    cos = np.sum(u * omega, axis=-1) / safe
    return np.where(nu > 0, nu ** cfg.gamma2, 0.0 if cfg.gamma2 > 0 else 1.0) * cfg.b2(cos)


def ternary_kernel(cfg, U, ut, omega):
    """|u~|^(gamma3-theta3) |U|^theta3 b3(U_hat . omega, omega1 . omega2).

    Equivalent to |u~|^gamma3 |U_bar . omega|^theta3 phi(omega1 . omega2).
    """
    d = cfg.d
    safe = np.where(ut > 0, ut, 1.0)
    proj = np.sum(U * omega, axis=-1) / safe
    dot = np.sum(omega[..., :d] * omega[..., d:], axis=-1)
    rad = np.where(ut > 0, ut ** cfg.gamma3, 0.0 if cfg.gamma3 > 0 else 1.0)
    return rad * np.abs(proj) ** cfg.theta3 * cfg.phi(dot)


def cross_section(cfg, arity, rel, omega):
    """Cross-section value for a :class:`RelativeState` and impact direction."""
    omega = np.asarray(omega, dtype=float)
    if arity == "binary":
        if not np.any(rel.u):
            raise DegenerateConfigurationError("binary relative velocity vanishes")
        return float(binary_kernel(cfg, rel.u, omega))
    if arity == "ternary":
        if rel.degenerate:
            raise DegenerateConfigurationError("ternary relative velocities vanish")
        return float(ternary_kernel(cfg, rel.U, rel.u_tilde_norm, omega))
    raise InvalidInputError(f"unknown arity {arity!r}")


@dataclass(frozen=True)
class NormResult:
    """Cutoff norm with a quadrature error estimate."""

    value: float
    error: float
    direction_variation: float = 0.0


def _binary_norm(cfg, n):
    a = 0.5 * (cfg.d - 3)
    z, w = roots_jacobi(n, a, a)
    return sphere_area(cfg.d - 1) * float(np.dot(w, cfg.b2(z)))


def _ternary_integral(cfg, quad, u_ref, refine=0):
    n_t, n_s = quad.n_theta + 4 * refine, quad.n_sphere + 2 * refine
    omega, w = double_sphere_rule(cfg.d, n_t, n_s, cfg.theta3)
    return float(np.dot(w, cfg.b3(omega @ u_ref, np.sum(omega[:, :cfg.d] * omega[:, cfg.d:], 1))))


def cutoff_norm(cfg, arity, quad=None, rtol=1e-6, n_directions=8, seed=0):
    """Angular cutoff norm ||b2|| or ||b3||.

    The error estimate is the change under a refined rule. The ternary norm
    is integrated against the reference direction e1 of R^{2d};
    ``direction_variation`` reports the largest relative deviation over
    ``n_directions`` random reference directions.
    """
    quad = quad or Quadrature.default(cfg.d)
    if arity == "binary":
        fine = _binary_norm(cfg, quad.n_binary)
        err, variation = abs(fine - _binary_norm(cfg, quad.n_binary + 16)), 0.0
    elif arity == "ternary":
        e1 = np.eye(2 * cfg.d)[0]
        fine = _ternary_integral(cfg, quad, e1)
        err = abs(fine - _ternary_integral(cfg, quad, e1, refine=1))
        variation = 0.0
        if n_directions and not (cfg.theta3 == 0 or cfg.phi.is_constant):
            rng = np.random.default_rng(seed)
            for _ in range(n_directions):
                u = rng.standard_normal(2 * cfg.d)
                u /= np.linalg.norm(u)
                variation = max(variation, abs(_ternary_integral(cfg, quad, u) / fine - 1.0))
    else:
        raise InvalidInputError(f"unknown arity {arity!r}")
    if err > rtol * max(1.0, abs(fine)):
        raise NumericalFailureError(f"{arity} cutoff quadrature residual {err:.3e}", best=fine)
    return NormResult(fine, err, variation)


def potential_constants(cfg):
    """(C_gamma2, C_gamma3) of the potential upper bounds."""
    g2, g3 = cfg.gamma2, cfg.gamma3
    return max(1.0, 2.0 ** (g2 - 1.0)), 2.0 ** g3 * max(1.0, 3.0 ** (g3 - 1.0))


def potential_envelope(cfg, v, v1, v2=None, perm=None):
    """(lower, value, upper) for the binary or ternary potential.

    Binary value |u|^gamma2; ternary value |u~|^(gamma3-theta3) |U|^theta3
    with U the stack relative to ``v``. ``perm`` indexes which particle
    carries the positive term of the lower bound. Broadcasts over leading axes.
    """
    v, v1 = np.asarray(v, dtype=float), np.asarray(v1, dtype=float)
    c2, c3 = potential_constants(cfg)
    if v2 is None:
        perm = perm or (0, 1)
        g = cfg.gamma2
        br = [bracket(v) ** g, bracket(v1) ** g]
        value = np.linalg.norm(v1 - v, axis=-1) ** g
        lower = 2.0 ** (-g / 2) * br[perm[0]] - br[perm[1]]
        return lower, value, c2 * (br[0] + br[1])
    v2 = np.asarray(v2, dtype=float)
    perm = perm or (0, 1, 2)
    g, th = cfg.gamma3, cfg.theta3
    br = [bracket(x) ** g for x in (v, v1, v2)]
    ut = u_tilde_norm(v, v1, v2)
    un = np.sqrt(np.sum((v1 - v) ** 2, -1) + np.sum((v2 - v) ** 2, -1))
    ratio = np.where(ut > 0, un / np.where(ut > 0, ut, 1.0), 1.0)
    value = ut ** g * ratio ** th
    lower = 3.0 ** (-th / 2) * ((2.0 / 3.0) ** (g / 2) * br[perm[0]] - br[perm[1]] - br[perm[2]])
    return lower, value, c3 * (br[0] + br[1] + br[2])
