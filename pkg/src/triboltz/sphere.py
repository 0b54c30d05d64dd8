"""Product quadrature rules on spheres S^{d-1} and S^{2d-1}.

Rules take an exponent ``theta`` for integrands carrying a factor |x1|^theta.
The affected panels then use Gauss-Jacobi nodes whose weight absorbs the
algebraic singularity, and the returned weights are divided by it, so the
rule stays spectrally accurate for |x1|^theta times a smooth function.
"""

from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi


def sphere_area(n):
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return float(np.exp(np.log(2.0) + 0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def _jacobi_panel(n, a, b, lo, hi):
    """Nodes on [lo, hi] with weights for integrands ~ (hi-x)^a (x-lo)^b * smooth."""
    t, w = roots_jacobi(n, a, b)
    h = 0.5 * (hi - lo)
    x = lo + h * (t + 1.0)
    return x, h * w / ((1.0 - t) ** a * (1.0 + t) ** b)


@lru_cache(maxsize=64)
def _sphere_rule(d, n, theta):
    if d == 2:
        if theta > 0:
            t1, w1 = _jacobi_panel(n, theta, theta, -0.5 * np.pi, 0.5 * np.pi)
            t, w = np.concatenate([t1, t1 + np.pi]), np.concatenate([w1, w1])
        else:
            t = 2.0 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
            w = np.full(2 * n, np.pi / n)
        return np.stack([np.cos(t), np.sin(t)], axis=1), w
    if d == 3:
        zn, wn = _jacobi_panel(n, theta, 0.0, -1.0, 0.0)
        zp, wp = _jacobi_panel(n, 0.0, theta, 0.0, 1.0)
        z, wz = np.concatenate([zn, zp]), np.concatenate([wn, wp])
    else:
        z, wz = roots_jacobi(2 * n, 0.5 * (d - 3), 0.5 * (d - 3))
    sub, wsub = _sphere_rule(d - 1, n, 0.0)
    r = np.sqrt(1.0 - z * z)
    pts = np.concatenate(
        [np.repeat(z, len(wsub))[:, None], (r[:, None, None] * sub[None]).reshape(-1, d - 1)],
        axis=1)
    return pts, np.outer(wz, wsub).ravel()


def sphere_rule(d, n, theta=0.0):
    """Nodes and weights on S^{d-1} with polar axis e1.

    ``n`` sets the resolution (2n points along each angle). The |x1|^theta
    treatment applies for d <= 3. Weights sum to the sphere area when
    ``theta`` is zero.
    """
    pts, w = _sphere_rule(int(d), int(n), float(theta))
    return pts.copy(), w.copy()


@lru_cache(maxsize=32)
def _double_polar(d, n_theta, n_sphere, theta):
    th, wth = _jacobi_panel(n_theta, theta, 0.0, 0.0, 0.5 * np.pi)
    c, s = np.cos(th), np.sin(th)
    wth = wth * (c * s) ** (d - 1)
    s1, w1 = _sphere_rule(d, n_sphere, theta)
    s2, w2 = _sphere_rule(d, n_sphere, 0.0)
    a = c[:, None, None, None] * s1[None, :, None, :]
    b = s[:, None, None, None] * s2[None, None, :, :]
    shape = (len(th), len(w1), len(w2), d)
    omega = np.concatenate([np.broadcast_to(a, shape), np.broadcast_to(b, shape)], axis=-1)
    weights = wth[:, None, None] * w1[None, :, None] * w2[None, None, :]
    omega.setflags(write=False)
    weights.setflags(write=False)
    return omega.reshape(-1, 2 * d), weights.ravel()


def double_sphere_rule(d, n_theta, n_sphere, theta=0.0):
    """Nodes and weights on S^{2d-1} via (cos t * s1, sin t * s2).

    ``n_theta`` nodes in t on [0, pi/2] carry the weight cos^{d-1} t
    sin^{d-1} t; s1 and s2 use :func:`sphere_rule`. With ``theta`` > 0 the
    rule targets integrands with a |omega . e1|^theta factor. Arrays are
    cached and read-only.
    """
    return _double_polar(int(d), int(n_theta), int(n_sphere), float(theta))


def uniform_sphere(rng, size, n):
    """``size`` uniform samples on S^{n-1}."""
    x = rng.standard_normal((size, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
