"""Coercive angular-averaging maps and the modified gain/loss decompositions.

The binary map alpha_{k/2} and the ternary map lambda_{k/2} are suprema of
angular averages of post-collision energy fractions raised to k/2. Both are
computed by a grid scan over a compact parameter box followed by bounded
Nelder-Mead refinement from the best grid points.

Reductions used by the searches:

* rotations act on (u_bar, V_hat) jointly and leave the averages unchanged,
  so V_hat = e1 (ternary) and u_hat = e1 (binary) are fixed;
* the fractions are affine in the center-of-mass term, so the averages are
  convex in it and symmetric under V_hat -> -V_hat; the supremum over the
  energy parameter alpha = 1 - 3/E3 (resp. the binary analogue) is therefore
  attained in the closure alpha = 1, which the ternary search uses directly
  and the binary search reaches through its zeta coordinate.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from ._fast import ternary_average as ternary_average_fast
from ._fast import ternary_gain_integrals as ternary_gain_fast
from .errors import DegenerateConfigurationError, InvalidInputError, NumericalFailureError
from .kernels import Quadrature, cutoff_norm
from .kinematics import bracket, ellipsoid_chart
from .moments import c2p, c3p, psi_approx
from .sphere import double_sphere_rule, sphere_rule

CHUNK = 1 << 21


# ---------------------------------------------------------------------------
# angular averages


def _ternary_rule(cfg, quad):
    omega, w = double_sphere_rule(cfg.d, quad.n_theta, quad.n_sphere)
    return omega, w


def _binary_rule(cfg, quad):
    return sphere_rule(cfg.d, quad.n_circle)


def _ternary_average(ks, xi, alpha, u_bar, v_hat, cfg, omega, w):
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    d = cfg.d
    kern_phi = w * cfg.phi(np.sum(omega[:, :d] * omega[:, d:], 1))
    return ternary_average_fast(ks, np.ascontiguousarray(xi, dtype=float),
                                np.ascontiguousarray(alpha, dtype=float),
                                np.ascontiguousarray(u_bar, dtype=float),
                                np.ascontiguousarray(v_hat, dtype=float),
                                np.ascontiguousarray(omega), kern_phi, float(cfg.theta3))


def gain_average_ternary(k, xi, u_bar, v_hat, cfg, alpha=1.0, quad=None):
    """Angular average of mu^{k/2} + mu1^{k/2} + mu2^{k/2} against b3.

    ``xi`` in [0, alpha], ``u_bar`` on the ellipsoid, ``v_hat`` a unit
    d-vector. ``alpha`` = 1 - 3/E3 (default: the high-energy closure 1).
    """
    if k < 2:
        raise InvalidInputError("order k must be >= 2")
    if not 0.0 <= xi <= alpha + 1e-13 or not 0.0 <= alpha <= 1.0:
        raise InvalidInputError("need 0 <= xi <= alpha <= 1")
    quad = quad or Quadrature.default(cfg.d)
    omega, w = _ternary_rule(cfg, quad)
    val = _ternary_average([k], np.array([float(xi)]), np.array([float(alpha)]),
                           np.asarray(u_bar, float)[None], np.asarray(v_hat, float)[None],
                           cfg, omega, w)[0, 0]
    if not np.isfinite(val):
        raise NumericalFailureError("non-finite ternary angular average")
    return float(val)


def _binary_average(ks, zeta, beta, cfg, omega, w):
    """Average of nu^{k/2} + nu1^{k/2} with u_hat = e1 and V_hat at angle beta."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    # reflected direction sigma = e1 - 2 (omega . e1) omega
    c = omega[:, 0]
    proj = np.cos(beta)[:, None] * (1.0 - 2.0 * c * c)[None, :]
    proj -= np.sin(beta)[:, None] * (2.0 * c * omega[:, 1])[None, :]
    nu = 0.5 * (1.0 - zeta[:, None] * proj)
    kern = w * cfg.b2(c)
    lg0, lg1 = np.log(np.maximum(nu, 1e-300)), np.log(np.maximum(1.0 - nu, 1e-300))
    return np.stack([np.sum(kern * (np.exp(0.5 * k * lg0) + np.exp(0.5 * k * lg1)), axis=1)
                     for k in ks], axis=1)


def gain_average_binary(k, zeta, beta, cfg, quad=None):
    """Angular average of nu^{k/2} + nu1^{k/2} against b2.

    nu = (1 - zeta V_hat . sigma)/2 is the post-collision energy fraction of
    the first particle, where zeta = 2|V||u|/E2 in [0, 1) for actual pairs
    and beta is the angle between V_hat and u_hat.
    """
    quad = quad or Quadrature.default(cfg.d)
    omega, w = _binary_rule(cfg, quad)
    return float(_binary_average([k], np.array([zeta]), np.array([beta]), cfg, omega, w)[0, 0])


# ---------------------------------------------------------------------------
# supremum search


def hyperspherical(angles):
    """Unit vectors in R^{n+1} from n hyperspherical angles (last one periodic)."""
    angles = np.atleast_2d(angles)
    n = angles.shape[1] + 1
    out = np.ones((angles.shape[0], n))
    s = np.ones(angles.shape[0])
    for j in range(n - 1):
        out[:, j] = s * np.cos(angles[:, j])
        s = s * np.sin(angles[:, j])
    out[:, -1] = s
    return out


@dataclass
class SupResult:
    """Supremum value, maximizer and search diagnostics."""

    value: float
    argmax: list
    approximate: bool = False
    meta: dict = field(default_factory=dict)


def _grid(bounds, n):
    axes = []
    for lo, hi, periodic in bounds:
        axes.append(lo + (hi - lo) * np.arange(n) / n if periodic else np.linspace(lo, hi, n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _nelder_mead(fun, x0, box, xatol, maxiter):
    return minimize(fun, x0, method="Nelder-Mead", bounds=box,
                    options={"xatol": xatol, "fatol": 1e-14, "maxiter": maxiter})


def _search(batch, ks, bounds, settings, coarse_batch=None):
    """Grid scan and Nelder-Mead refinement per order.

    The grid and the multi-start refinement run on ``coarse_batch`` (a cheaper
    quadrature of the same average, default ``batch``); the best point is then
    polished on ``batch``, which defines the reported value.
    """
    coarse_batch = coarse_batch or batch
    pts = _grid(bounds, settings.grid_n)
    vals = coarse_batch(ks, pts)
    box = [(lo, hi) for lo, hi, _ in bounds]
    results = []
    for j, k in enumerate(ks):
        order = np.argsort(vals[:, j])[::-1][:settings.n_starts]
        best_v, best_x, nfev, ok = vals[order[0], j], pts[order[0]], 0, True
        for i in order:
            r = _nelder_mead(lambda x: -coarse_batch([k], x[None])[0, 0], pts[i], box,
                             settings.coarse_xatol, settings.maxiter)
            nfev += r.nfev
            ok = ok and r.success
            if -r.fun > best_v:
                best_v, best_x = -r.fun, r.x
        coarse_v = best_v
        if coarse_batch is not batch:
            start = batch([k], best_x[None])[0, 0]
            r = _nelder_mead(lambda x: -batch([k], x[None])[0, 0], best_x, box,
                             settings.xatol, settings.maxiter)
            nfev += r.nfev
            ok = ok and r.success
            best_v, best_x = (-r.fun, r.x) if -r.fun > start else (start, best_x)
        meta = {"grid_points": len(pts), "n_starts": settings.n_starts, "nfev": int(nfev),
                "grid_best": float(vals[order[0], j]), "coarse_best": float(coarse_v)}
        results.append(SupResult(float(best_v), [float(x) for x in best_x], not ok, meta))
    return results


@dataclass(frozen=True)
class SearchSettings:
    """Resolution of the supremum search.

    ``coarse_theta`` and ``coarse_sphere`` set the cheaper ternary rule used
    by the grid scan and the multi-start stage; zero disables it.
    """

    grid_n: int = 7
    n_starts: int = 10
    coarse_xatol: float = 1e-4
    xatol: float = 1e-7
    maxiter: int = 4000
    coarse_theta: int = 10
    coarse_sphere: int = 6


def _ternary_batch(cfg, quad):
    omega, w = _ternary_rule(cfg, quad)
    e1 = np.eye(cfg.d)[0]

    def batch(ks, x):
        x = np.atleast_2d(x)
        xi = np.clip(x[:, 0], 0.0, 1.0)
        u_bar = ellipsoid_chart(hyperspherical(x[:, 1:]))
        v_hat = np.broadcast_to(e1, (len(x), cfg.d))
        return _ternary_average(ks, xi, np.ones(len(x)), u_bar, v_hat, cfg, omega, w)
    bounds = [(0.0, 1.0, False)] + [(0.0, np.pi, False)] * (2 * cfg.d - 2) + [(0.0, 2 * np.pi, True)]
    return batch, bounds


def _binary_batch(cfg, quad):
    omega, w = _binary_rule(cfg, quad)

    def batch(ks, x):
        x = np.atleast_2d(x)
        return _binary_average(ks, np.clip(x[:, 0], 0.0, 1.0), x[:, 1], cfg, omega, w)
    return batch, [(0.0, 1.0, False), (0.0, np.pi, False)]


def lambda_coeffs(ks, cfg, quad=None, search=None):
    """Ternary coercive values lambda_{k/2} for each k in ``ks``."""
    if min(ks) < 2:
        raise InvalidInputError("orders must be >= 2")
    quad = quad or Quadrature.default(cfg.d)
    search = search or SearchSettings()
    batch, bounds = _ternary_batch(cfg, quad)
    coarse = None
    if search.coarse_theta:
        cq = Quadrature(n_theta=search.coarse_theta, n_sphere=search.coarse_sphere)
        coarse = _ternary_batch(cfg, cq)[0]
    return _search(batch, list(ks), bounds, search, coarse)


def alpha_coeffs(ks, cfg, quad=None, search=None):
    """Binary coercive values alpha_{k/2} for each k in ``ks``."""
    if min(ks) < 2:
        raise InvalidInputError("orders must be >= 2")
    quad = quad or Quadrature.default(cfg.d)
    search = search or SearchSettings(grid_n=41)
    batch, bounds = _binary_batch(cfg, quad)
    return _search(batch, list(ks), bounds, search)


def lambda_coeff(k, cfg, quad=None, search=None):
    """Supremum lambda_{k/2} of :func:`gain_average_ternary`."""
    return lambda_coeffs([k], cfg, quad, search)[0]


def alpha_coeff(k, cfg, quad=None, search=None):
    """Supremum alpha_{k/2} of :func:`gain_average_binary`."""
    return alpha_coeffs([k], cfg, quad, search)[0]


# ---------------------------------------------------------------------------
# tables and caching


@dataclass
class CoerciveTable:
    """Coercive values over increasing orders."""

    kind: str
    orders: list
    values: list
    argmax: list
    approximate: list
    meta: dict

    def is_strictly_decreasing(self):
        return bool(np.all(np.diff(self.values) < 0))

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _cache_key(kind, cfg, ks, quad, search):
    blob = json.dumps([kind, cfg.to_dict(), [float(k) for k in ks], asdict(quad), asdict(search)],
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def cache_dir():
    """Directory for cached tables (``TRIBOLTZ_CACHE`` or ~/.cache/triboltz)."""
    return Path(os.environ.get("TRIBOLTZ_CACHE", Path.home() / ".cache" / "triboltz"))


def coercive_table(kind, ks, cfg, quad=None, search=None, use_cache=True):
    """Build (or load from cache) an alpha or lambda table over ``ks``."""
    ks = sorted(float(k) for k in ks)
    quad = quad or Quadrature.default(cfg.d)
    if search is None:
        search = SearchSettings(grid_n=41) if kind == "alpha" else SearchSettings()
    key = _cache_key(kind, cfg, ks, quad, search)
    path = cache_dir() / f"{kind}-{key}.json"
    if use_cache and path.exists():
        return CoerciveTable.from_json(path.read_text())
    fn = {"alpha": alpha_coeffs, "lambda": lambda_coeffs}[kind]
    res = fn(ks, cfg, quad, search)
    table = CoerciveTable(
        kind=kind, orders=ks, values=[r.value for r in res], argmax=[r.argmax for r in res],
        approximate=[r.approximate for r in res],
        meta={"key": key, "cfg": cfg.digest(), "quadrature": asdict(quad),
              "search": asdict(search), "per_order": [r.meta for r in res]})
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.to_json())
    return table


class CoerciveTables:
    """Cutoff norms plus on-demand alpha_{k/2}, lambda_{k/2} lookups."""

    def __init__(self, cfg, quad=None, search_alpha=None, search_lambda=None, use_cache=True):
        self.cfg = cfg
        self.quad = quad or Quadrature.default(cfg.d)
        self.search_alpha = search_alpha or SearchSettings(grid_n=41)
        self.search_lambda = search_lambda or SearchSettings()
        self.use_cache = use_cache
        self.norm2 = cutoff_norm(cfg, "binary", self.quad).value
        self.norm3 = cutoff_norm(cfg, "ternary", self.quad).value
        self._memo = {}
        self.overrides = {}

    def _lookup(self, kind, k):
        key = (kind, float(k))
        if key in self.overrides:
            return self.overrides[key]
        if key not in self._memo:
            search = self.search_alpha if kind == "alpha" else self.search_lambda
            t = coercive_table(kind, [k], self.cfg, self.quad, search, self.use_cache)
            self._memo[key] = t.values[0]
        return self._memo[key]

    def preload(self, table):
        for k, v in zip(table.orders, table.values):
            self._memo[(table.kind, float(k))] = v

    def alpha(self, k):
        return self._lookup("alpha", k)

    def lam(self, k):
        return self._lookup("lambda", k)

    def digest(self):
        items = sorted((f"{a}:{b}", v) for (a, b), v in {**self._memo, **self.overrides}.items())
        return hashlib.sha256(json.dumps([self.cfg.to_dict(), items]).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# modified decompositions


def gain_constant_binary(k):
    """C_k = 2 + 1/2 + 3 C_{2,k} of the binary decomposition."""
    return 2.5 + 3.0 * c2p(k)


def gain_constant_ternary(k, use_c3=False):
    """C_k = 2 + 3/2 + 4 C_{2,k}, or with C_{3,k} when ``use_c3`` is set."""
    return 3.5 + 4.0 * (c3p(k) if use_c3 else c2p(k))


def _psi(k, mode):
    if mode == "power":
        return lambda x: x ** (0.5 * k)
    if isinstance(mode, tuple) and mode[0] == "approx":
        n = mode[1]
        return lambda x: psi_approx(x, n, k)
    raise InvalidInputError(f"unknown psi mode {mode!r}")


@dataclass
class Decomposition:
    """Modified gain/loss pair with the raw angular integrals and region."""

    gain: np.ndarray
    loss: np.ndarray
    G: np.ndarray
    L: np.ndarray
    region: np.ndarray
    brackets: np.ndarray


def binary_post_energies(v, v1, omega):
    """<v'>^2 and <v1'>^2 at every node; shapes (P, M)."""
    u = v1 - v
    s = u @ omega.T
    vv = 1.0 + np.sum(v * v, 1)[:, None] + 2.0 * s * (v @ omega.T) + s * s
    vv1 = 1.0 + np.sum(v1 * v1, 1)[:, None] - 2.0 * s * (v1 @ omega.T) + s * s
    return vv, vv1


def ternary_post_energies(v, v1, v2, omega):
    """<v*>^2, <v1*>^2, <v2*>^2 for the central collision at every node."""
    d = v.shape[1]
    w1, w2 = omega[:, :d], omega[:, d:]
    s12 = np.sum(w1 * w2, 1)
    c = ((v1 - v) @ w1.T + (v2 - v) @ w2.T) / (1.0 + s12)
    e0 = 1.0 + np.sum(v * v, 1)[:, None] + 2.0 * c * (v @ w1.T + v @ w2.T) + c * c * (1 + 2 * s12)
    e1 = 1.0 + np.sum(v1 * v1, 1)[:, None] - 2.0 * c * (v1 @ w1.T) + c * c * np.sum(w1 * w1, 1)
    e2 = 1.0 + np.sum(v2 * v2, 1)[:, None] - 2.0 * c * (v2 @ w2.T) + c * c * np.sum(w2 * w2, 1)
    return e0, e1, e2


def _regions_binary(b):
    a0c = b[:, 0] > 2 * b[:, 1]
    a1c = b[:, 1] > 2 * b[:, 0]
    return np.where(a0c, 1, np.where(a1c, 2, 0))


def _regions_ternary(b):
    out = np.zeros(len(b), dtype=int)
    for i in range(3):
        others = [j for j in range(3) if j != i]
        dom = (b[:, i] > 2 * b[:, others[0]]) & (b[:, i] > 2 * b[:, others[1]])
        out[dom] = i + 1
    return out


def modified_decomposition_binary(v, v1, k, cfg, psi_mode="power", quad=None, norm2=None):
    """Modified binary gain and loss for pairs (batched over leading axis).

    ``region`` is 0 on the set where the brackets lie within a factor two of
    each other and i+1 where particle i dominates.
    """
    if k <= 2:
        raise InvalidInputError("decomposition requires k > 2")
    v, v1 = np.atleast_2d(v).astype(float), np.atleast_2d(v1).astype(float)
    if np.any(np.all(v == v1, axis=1)):
        raise DegenerateConfigurationError("binary relative velocity vanishes")
    quad = quad or Quadrature.default(cfg.d)
    norm2 = norm2 if norm2 is not None else cutoff_norm(cfg, "binary", quad).value
    psi = _psi(k, psi_mode)
    omega, w = _binary_rule(cfg, quad)
    P = len(v)
    G = np.empty(P)
    step = max(1, CHUNK // len(w))
    for a in range(0, P, step):
        sl = slice(a, a + step)
        u = v1[sl] - v[sl]
        uh = u / np.linalg.norm(u, axis=1, keepdims=True)
        kern = w[None, :] * cfg.b2(uh @ omega.T)
        e0, e1 = binary_post_energies(v[sl], v1[sl], omega)
        G[sl] = np.sum(kern * (psi(e0) + psi(e1)), axis=1)
    br = np.stack([bracket(v), bracket(v1)], axis=1)
    pb = psi(br ** 2)
    L = norm2 * pb.sum(1)
    region = _regions_binary(br)
    E = (br ** 2).sum(1)
    frac = np.zeros(P)
    for i in range(2):
        m = region == i + 1
        frac[m] = pb[m, i] / psi(E[m])
    return Decomposition(gain=(1.0 - frac) * G, loss=L - frac * G, G=G, L=L,
                         region=region, brackets=br)


def modified_decomposition_ternary(v, v1, v2, k, cfg, psi_mode="power", quad=None, norm3=None):
    """Modified ternary gain and loss for triples (batched over leading axis)."""
    return modified_decompositions_ternary(v, v1, v2, [k], cfg, psi_mode, quad, norm3)[0]


def modified_decompositions_ternary(v, v1, v2, ks, cfg, psi_mode="power", quad=None, norm3=None):
    """:func:`modified_decomposition_ternary` for several orders in one pass."""
    if min(ks) <= 2:
        raise InvalidInputError("decomposition requires k > 2")
    v, v1, v2 = (np.atleast_2d(x).astype(float) for x in (v, v1, v2))
    U = np.concatenate([v1 - v, v2 - v], axis=1)
    nU = np.linalg.norm(U, axis=1)
    if np.any(nU == 0):
        raise DegenerateConfigurationError("ternary relative velocities vanish")
    quad = quad or Quadrature.default(cfg.d)
    norm3 = norm3 if norm3 is not None else cutoff_norm(cfg, "ternary", quad).value
    omega, w = _ternary_rule(cfg, quad)
    d = cfg.d
    s12 = np.sum(omega[:, :d] * omega[:, d:], 1)
    P = len(v)
    if psi_mode == "power":
        Gs = ternary_gain_fast(v, v1, v2, np.ascontiguousarray(omega), w * cfg.phi(s12),
                               float(cfg.theta3), np.asarray(ks, dtype=float)).T
    else:
        Gs = np.empty((len(ks), P))
        step = max(1, CHUNK // len(w))
        for a in range(0, P, step):
            sl = slice(a, a + step)
            kern = w[None, :] * cfg.b3((U[sl] / nU[sl, None]) @ omega.T, s12[None, :])
            es = ternary_post_energies(v[sl], v1[sl], v2[sl], omega)
            for j, k in enumerate(ks):
                psi = _psi(k, psi_mode)
                Gs[j, sl] = np.sum(kern * sum(psi(e) for e in es), axis=1)
    br = np.stack([bracket(v), bracket(v1), bracket(v2)], axis=1)
    region = _regions_ternary(br)
    E = (br ** 2).sum(1)
    out = []
    for k, G in zip(ks, Gs):
        psi = _psi(k, psi_mode)
        pb = psi(br ** 2)
        L = norm3 * pb.sum(1)
        frac = np.zeros(P)
        for i in range(3):
            m = region == i + 1
            frac[m] = pb[m, i] / psi(E[m])
        out.append(Decomposition(gain=(1.0 - frac) * G, loss=L - frac * G, G=G, L=L,
                                 region=region, brackets=br))
    return out


def decomposition_bounds(dec, k, coeff, norm, psi_mode="power", use_c3=False):
    """(gain_bound, loss_bound) for a :class:`Decomposition`.

    ``coeff`` is alpha_{k/2} or lambda_{k/2}; in approximation mode the gain
    bound uses ``norm`` and the loss bound is zero.
    """
    b = dec.brackets
    approx = psi_mode != "power"
    amp = norm if approx else coeff
    if b.shape[1] == 2:
        mixed = b[:, 0] * b[:, 1] * (b[:, 0] ** (k - 2) + b[:, 1] ** (k - 2))
        gain = amp * gain_constant_binary(k) * mixed
    else:
        pairs = b[:, 0] * b[:, 1] + b[:, 0] * b[:, 2] + b[:, 1] * b[:, 2]
        gain = amp * gain_constant_ternary(k, use_c3) * pairs * np.sum(b ** (k - 2), 1)
    loss = np.zeros(len(b)) if approx else (norm - coeff) * np.sum(b ** k, 1)
    return gain, loss
