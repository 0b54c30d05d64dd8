"""Binary and ternary collision maps and the geometry built on them.

All functions broadcast over leading axes: a velocity is an array whose last
axis has length ``d`` and a ternary impact direction has last axis ``2d``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigurationError, InvalidInputError

UNIT_TOL = 1e-12
SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)


def bracket(v):
    """Japanese bracket sqrt(1 + |v|^2) along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def _as_velocities(*vs):
    arrs = [np.asarray(v, dtype=float) for v in vs]
    d = arrs[0].shape[-1] if arrs[0].ndim else 0
    if d < 1 or any(a.ndim == 0 or a.shape[-1] != d for a in arrs):
        raise InvalidInputError("velocity dimension mismatch")
    return arrs, d


def _check_unit(w, name):
    n = np.linalg.norm(w, axis=-1)
    if np.any(np.abs(n - 1.0) > 1e-10):
        raise InvalidInputError(f"{name} must have unit norm")


def binary_collide(v, v1, omega):
    """Post-collision pair ``(v', v1')`` for impact direction ``omega``.

    v' = v + (omega.u) omega and v1' = v1 - (omega.u) omega with u = v1 - v.
    """
    (v, v1, omega), _ = _as_velocities(v, v1, omega)
    _check_unit(omega, "omega")
    s = np.sum((v1 - v) * omega, axis=-1, keepdims=True)
    return v + s * omega, v1 - s * omega


def _central_map(c, a, b, omega):
    """Ternary map with ``c`` central and ``a``, ``b`` paired with omega1, omega2."""
    d = c.shape[-1]
    w1, w2 = omega[..., :d], omega[..., d:]
    udotw = np.sum((a - c) * w1 + (b - c) * w2, axis=-1, keepdims=True)
    coef = udotw / (1.0 + np.sum(w1 * w2, axis=-1, keepdims=True))
    return c + coef * (w1 + w2), a - coef * w1, b - coef * w2


def ternary_collide(v, v1, v2, omega, mode="central"):
    """Post-collision triple for impact direction ``omega`` in S^{2d-1}.

    ``mode="central"`` treats ``v`` as the central particle, with relative
    stack u = (v1 - v, v2 - v). ``mode="adjacent"`` treats ``v`` as an
    adjacent particle: the relative stack is u1 = (v - v1, v2 - v1), so ``v1``
    is the central one and ``v`` pairs with omega1. Outputs are returned in
    the input order ``(v, v1, v2)``.
    """
    (v, v1, v2), d = _as_velocities(v, v1, v2)
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != 2 * d:
        raise InvalidInputError("ternary impact direction must have length 2d")
    _check_unit(omega, "omega")
    if mode == "central":
        return _central_map(v, v1, v2, omega)
    if mode == "adjacent":
        c, a, b = _central_map(v1, v, v2, omega)
        return a, c, b
    raise InvalidInputError(f"unknown ternary mode {mode!r}")


def u_tilde_norm(v, v1, v2):
    """Symmetric relative speed |u~| of a triple."""
    sq = (np.sum((v - v1) ** 2, axis=-1) + np.sum((v - v2) ** 2, axis=-1)
          + np.sum((v1 - v2) ** 2, axis=-1))
    return np.sqrt(sq)


@dataclass(frozen=True)
class RelativeState:
    """Relative velocities of a triple; ``u`` is the binary v1 - v.

    ``u_bar`` and ``u_bar1`` are None when ``degenerate`` is set.
    """

    u: np.ndarray
    U: np.ndarray
    U1: np.ndarray
    u_tilde_norm: float
    u_bar: np.ndarray | None
    u_bar1: np.ndarray | None
    degenerate: bool


def relative_state(v, v1, v2):
    """Relative stacks, |u~| and the normalized points on the ellipsoid."""
    (v, v1, v2), _ = _as_velocities(v, v1, v2)
    if v.ndim != 1:
        raise InvalidInputError("relative_state takes single velocities")
    U = np.concatenate([v1 - v, v2 - v])
    U1 = np.concatenate([v - v1, v2 - v1])
    ut = float(u_tilde_norm(v, v1, v2))
    degenerate = ut == 0.0
    return RelativeState(
        u=v1 - v, U=U, U1=U1, u_tilde_norm=ut,
        u_bar=None if degenerate else U / ut,
        u_bar1=None if degenerate else U1 / ut,
        degenerate=degenerate,
    )


def ellipsoid_residual(nu):
    """|nu1|^2 + |nu2|^2 + |nu1 - nu2|^2 - 1 along the last axis."""
    nu = np.asarray(nu, dtype=float)
    d = nu.shape[-1] // 2
    a, b = nu[..., :d], nu[..., d:]
    return np.sum(a * a + b * b + (a - b) ** 2, axis=-1) - 1.0


def ellipsoid_chart(p):
    """Map a unit 2d-vector onto the ellipsoid |nu1|^2+|nu2|^2+|nu1-nu2|^2 = 1."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] % 2:
        raise InvalidInputError("chart input must have even length")
    _check_unit(p, "p")
    d = p.shape[-1] // 2
    pa, pb = p[..., :d], p[..., d:] / SQRT3
    return np.concatenate([(pa + pb) / SQRT2, (pa - pb) / SQRT2], axis=-1)


def ellipsoid_chart_inverse(nu):
    """Inverse of :func:`ellipsoid_chart`."""
    nu = np.asarray(nu, dtype=float)
    d = nu.shape[-1] // 2
    a, b = nu[..., :d], nu[..., d:]
    return np.concatenate([(a + b) / SQRT2, SQRT3 * (a - b) / SQRT2], axis=-1)


@dataclass(frozen=True)
class ScatteringFrame:
    """Center-of-mass description of a triple.

    ``sigma`` is the normalized relative stack (post-collision when an impact
    direction was supplied). ``v_hat`` is V3/|V3|, or e1 when V3 = 0.
    """

    V3: np.ndarray
    v_hat: np.ndarray
    sigma: np.ndarray
    u_tilde_norm: float
    energy: float
    xi1: float
    xi1_prime: float
    alpha: float


def scattering_frame(v, v1, v2, omega=None):
    """Scattering-frame parameters of a triple.

    Without ``omega`` the returned ``sigma`` is u/|u~|; with ``omega`` it is
    u*/|u~| for the central collision, which places the post-collision
    velocities at V3 - |u~|(s1 + s2)/3, V3 + |u~|(2 s1 - s2)/3 and
    V3 + |u~|(2 s2 - s1)/3.
    """
    (v, v1, v2), d = _as_velocities(v, v1, v2)
    ut = float(u_tilde_norm(v, v1, v2))
    if ut == 0.0:
        raise DegenerateConfigurationError("all three velocities coincide")
    if omega is not None:
        v, v1, v2 = ternary_collide(v, v1, v2, omega, "central")
    V3 = (v + v1 + v2) / 3.0
    energy = float(np.sum(bracket(np.stack([v, v1, v2])) ** 2))
    nV = float(np.linalg.norm(V3))
    v_hat = V3 / nV if nV > 0 else np.eye(d)[0]
    alpha = 1.0 - 3.0 / energy
    xi1 = ut * ut / (3.0 * energy)
    return ScatteringFrame(
        V3=V3, v_hat=v_hat, sigma=np.concatenate([v1 - v, v2 - v]) / ut,
        u_tilde_norm=ut, energy=energy, xi1=xi1,
        xi1_prime=2.0 * ut * nV / energy, alpha=alpha,
    )


def energy_fractions(xi, alpha, sigma, v_hat):
    """Post-collision energy fractions (mu, mu1, mu2) of a ternary collision.

    ``alpha`` is 1 - 3/E3 and must satisfy 0 <= xi <= alpha <= 1; the closure
    alpha = 1 is admitted as the high-energy limit. Broadcasts over leading
    axes of ``sigma``.
    """
    xi = np.asarray(xi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise InvalidInputError("alpha must lie in [0, 1]")
    if np.any(xi < 0) or np.any(xi > alpha + 1e-13):
        raise InvalidInputError("xi must lie in [0, alpha]")
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[-1] // 2
    s1, s2 = sigma[..., :d], sigma[..., d:]
    r = 2.0 * np.sqrt(np.maximum(alpha * xi - xi * xi, 0.0))
    r = np.expand_dims(r, -1) if r.ndim else r
    xie = np.expand_dims(xi, -1) if xi.ndim else xi
    out = []
    for sign, w in ((-1.0, s1 + s2), (1.0, 2 * s1 - s2), (1.0, 2 * s2 - s1)):
        proj = np.sum(w * v_hat, axis=-1, keepdims=True)
        ww = np.sum(w * w, axis=-1, keepdims=True)
        out.append(((1.0 + sign * r * proj + xie * (ww - 1.0)) / 3.0)[..., 0])
    return tuple(out)


def ternary_linear_map(omega, mode="central"):
    """Matrix of the ternary collision on R^{3d} for fixed ``omega``."""
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[-1] // 2
    eye = np.eye(3 * d)
    cols = ternary_collide(eye[:, :d], eye[:, d:2 * d], eye[:, 2 * d:],
                           np.broadcast_to(omega, (3 * d, 2 * d)), mode)
    return np.concatenate(cols, axis=1).T


def binary_linear_map(omega):
    """Matrix of the binary collision on R^{2d} for fixed ``omega``."""
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[-1]
    eye = np.eye(2 * d)
    cols = binary_collide(eye[:, :d], eye[:, d:], np.broadcast_to(omega, (2 * d, d)))
    return np.concatenate(cols, axis=1).T
