"""Monte Carlo evaluation of the weak form of the collision operator.

The estimator samples distinct ordered pairs and triples of particles, so it
targets the ensemble's empirical measure with the diagonal removed. Binary
angular integrals use a product rule; ternary ones use uniform directions on
S^{2d-1} reweighted by the kernel.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, stats

from .bounds import exp_lemma_rhs, odi_constants
from .kernels import binary_kernel, ternary_kernel
from .kinematics import binary_collide, bracket, ternary_collide, u_tilde_norm
from .moments import moment
from .sphere import sphere_area, sphere_rule, uniform_sphere


@dataclass(frozen=True)
class TestFunction:
    """Named test function acting on arrays of velocities (last axis d)."""

    name: str
    fn: object

    def __call__(self, v):
        return self.fn(np.asarray(v, dtype=float))


def poly_weight(q):
    return TestFunction(f"poly({q})", lambda v: bracket(v) ** q)


def exp_weight(s, z):
    return TestFunction(f"exp({s},{z})", lambda v: np.exp(z * bracket(v) ** s))


def mass_weight():
    return TestFunction("mass", lambda v: np.ones(v.shape[:-1]))


def energy_weight():
    return TestFunction("energy", lambda v: np.sum(v * v, axis=-1))


def momentum_weight(i):
    return TestFunction(f"momentum[{i}]", lambda v: v[..., i])


@dataclass(frozen=True)
class Budget:
    """Sample sizes: pairs and triples are totals split over ``n_batches``."""

    n_pairs: int = 64_000
    n_triples: int = 64_000
    n_dirs: int = 8
    n_circle: int = 8
    n_batches: int = 32
    target_stderr: float | None = None


@dataclass
class WeakFormEstimate:
    value: float
    stderr: float
    sample_pairs: int
    sample_triples: int
    angular_nodes: int
    breakdown: dict = field(default_factory=dict)
    seed: int = 0
    low_confidence: bool = False


def _distinct(rng, n, size, k):
    i = rng.integers(0, n, size)
    if k == 1:
        return (i,)
    j = rng.integers(0, n - 1, size)
    j = j + (j >= i)
    if k == 2:
        return i, j
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    m = rng.integers(0, n - 2, size)
    m = m + (m >= lo)
    m = m + (m >= hi)
    return i, j, m


def binary_term(cfg, phi, v, v1, nodes, weights):
    """Angular integral of B2 (phi' + phi1' - phi - phi1) for each pair."""
    om = nodes[None]
    vp, v1p = binary_collide(v[:, None], v1[:, None], np.broadcast_to(om, (len(v),) + nodes.shape))
    delta = phi(vp) + phi(v1p) - (phi(v) + phi(v1))[:, None]
    kern = binary_kernel(cfg, (v1 - v)[:, None], om)
    return (kern * delta) @ weights


def ternary_term(cfg, phi, v, v1, v2, omega):
    """Uniform-direction MC estimate of the angular integral of B3 times Delta phi."""
    d = cfg.d
    vs, v1s, v2s = ternary_collide(v[:, None], v1[:, None], v2[:, None], omega)
    delta = phi(vs) + phi(v1s) + phi(v2s) - (phi(v) + phi(v1) + phi(v2))[:, None]
    U = np.concatenate([v1 - v, v2 - v], axis=-1)[:, None]
    ut = u_tilde_norm(v, v1, v2)[:, None]
    kern = ternary_kernel(cfg, U, ut, omega)
    return sphere_area(2 * d) * np.mean(kern * delta, axis=1)


def _binary_rule(d, n):
    return sphere_rule(d, n)


def weakform_estimate(e, phi, cfg, budget=None, seed=0, binary=True, ternary=True):
    """Estimate of the weak form of Q applied to the ensemble against ``phi``."""
    budget = budget or Budget()
    N, w, d = e.n, e.weight, e.d
    V = e.velocities
    nodes, weights = _binary_rule(d, budget.n_circle)
    B = budget.n_batches
    pp, pt = budget.n_pairs // B, budget.n_triples // B
    streams = np.random.SeedSequence(seed).spawn(B)
    xb, xt = np.zeros(B), np.zeros(B)
    scale2 = 0.5 * w * w * N * (N - 1)
    scale3 = w ** 3 * N * (N - 1) * (N - 2) / 6.0
    for b, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        if binary and N >= 2 and pp:
            i, j = _distinct(rng, N, pp, 2)
            xb[b] = scale2 * np.mean(binary_term(cfg, phi, V[i], V[j], nodes, weights))
        if ternary and N >= 3 and pt:
            i, j, k = _distinct(rng, N, pt, 3)
            om = uniform_sphere(rng, pt * budget.n_dirs, 2 * d).reshape(pt, budget.n_dirs, 2 * d)
            xt[b] = scale3 * np.mean(ternary_term(cfg, phi, V[i], V[j], V[k], om))
    tot = xb + xt
    se = lambda x: float(np.std(x, ddof=1) / np.sqrt(B)) if B > 1 else float("inf")
    value, stderr = float(np.mean(tot)), se(tot)
    low = budget.target_stderr is not None and stderr > budget.target_stderr
    return WeakFormEstimate(
        value=value, stderr=stderr, sample_pairs=pp * B if binary else 0,
        sample_triples=pt * B if ternary else 0,
        angular_nodes=len(weights),
        breakdown={"binary": float(np.mean(xb)), "binary_stderr": se(xb),
                   "ternary": float(np.mean(xt)), "ternary_stderr": se(xt)},
        seed=seed, low_confidence=low)


def collision_frequencies(e, v, cfg, norm2, norm3, chunk=256):
    """(nu2, nu3) of the ensemble's empirical measure at velocities ``v``.

    nu3 sums over all ordered pairs (j, k), the diagonal included, so both
    values are exact for the discrete measure.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    V, w = e.velocities, e.weight
    g2, g3, th = cfg.gamma2, cfg.gamma3, cfg.theta3
    nu2 = np.empty(len(v))
    nu3 = np.empty(len(v))
    for a, x in enumerate(v):
        r = np.linalg.norm(V - x, axis=1)
        nu2[a] = norm2 * w * np.sum(r ** g2)
        tot = 0.0
        for s in range(0, len(V), chunk):
            vj = V[s:s + chunk, None, :]
            vk = V[None, :, :]
            ut = u_tilde_norm(x, vj, vk)
            un = np.sqrt(np.sum((vj - x) ** 2, -1) + np.sum((vk - x) ** 2, -1))
            ratio = np.where(ut > 0, un / np.where(ut > 0, ut, 1.0), 1.0)
            tot += np.sum(ut ** g3 * ratio ** th)
        nu3[a] = norm3 * w * w * tot
    return nu2, nu3


@dataclass
class OdiReport:
    q: float
    lhs: float
    stderr: float
    rhs: dict
    margin_sigma: dict
    passed: dict
    seed: int
    budget: dict
    constants: dict

    @property
    def ok(self):
        return all(self.passed.values())


def odi_verify(e, q, cfg, tables, budget=None, seed=0, s=None, p=None, nsigma=3.0):
    """Compare the weak-form estimate at order q with the inequality right sides.

    RHS1 and RHS2 are the shifted and power forms; when ``s`` and integer ``p``
    with s p = q are given, RHS3 is the right side of the order-sp estimate.
    """
    budget = budget or Budget()
    b = e.brackets()
    m = lambda k: moment(e, k, b)
    m0, m2 = m(0), m(2)
    odi = odi_constants(q, m0, m2, cfg, tables)
    est = weakform_estimate(e, poly_weight(q), cfg, budget, seed)
    rhs = {"shifted": odi.rhs_shifted(m(q), m(q + cfg.gamma2), m(q + cfg.gamma3)),
           "power": odi.rhs_power(m(q))}
    if s is not None and p is not None:
        rhs["series"] = exp_lemma_rhs(m, p, s, m0, m2, cfg, tables)
    sig = max(est.stderr, 1e-300)
    margins = {k: (r - est.value) / sig for k, r in rhs.items()}
    passed = {k: bool(est.value <= r + nsigma * est.stderr) for k, r in rhs.items()}
    return OdiReport(q, est.value, est.stderr, rhs, margins, passed, seed, asdict(budget),
                     {"Cq": odi.Cq, "CqPrime": odi.CqPrime, "CqTilde": odi.CqTilde})


def gaussian_convolution(v_norm, gamma, d, temperature=1.0, m0=1.0):
    """Integral of f(v1)|v - v1|^gamma for the centred Gaussian f of mass m0.

    |v - X|^2 / T is noncentral chi-square with d degrees of freedom.
    """
    T = temperature
    nc = v_norm * v_norm / T
    dist = stats.ncx2(d, nc) if nc > 0 else stats.chi2(d)
    hi = dist.ppf(1 - 1e-15) * 2 + 50.0
    val, _ = integrate.quad(lambda y: y ** (0.5 * gamma) * dist.pdf(y), 0.0, hi, limit=200,
                            epsabs=1e-13, epsrel=1e-11)
    return m0 * T ** (0.5 * gamma) * val


def convolution_ratio(gamma, d, v_max=10.0, n=201, temperature=1.0, m0=1.0):
    """(min ratio, argmin |v|, ratios) of the Gaussian convolution over <v>^gamma."""
    r = np.linspace(0.0, v_max, n)
    vals = np.array([gaussian_convolution(x, gamma, d, temperature, m0) for x in r])
    ratio = vals / (1.0 + r * r) ** (0.5 * gamma)
    i = int(np.argmin(ratio))
    return float(ratio[i]), float(r[i]), ratio
