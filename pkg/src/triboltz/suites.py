"""Randomized property suites shared by the CLI ``verify`` command and tests.

Each suite returns a list of :class:`Check` records; a check fails when it
has at least one violation and then carries the first counterexample.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels import binary_kernel, potential_envelope, ternary_kernel
from .kinematics import (binary_collide, bracket, energy_fractions, scattering_frame,
                         ternary_collide, u_tilde_norm)
from .moments import (Ensemble, convex_dilation_gap, interpolation_bound, polynomial_gap_bound,
                      power_sum_bound, psi_approx, series_bound_check)
from .sphere import uniform_sphere
from .weakform import Budget, odi_verify, poly_weight, weakform_estimate

SUITES = ("kinematics", "lemmas", "odi", "stationarity")


@dataclass
class Check:
    name: str
    cases: int
    violations: int
    worst: float
    counterexample: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.violations == 0

    def to_dict(self):
        return {**asdict(self), "ok": self.ok}


def _tolist(x):
    return np.asarray(x, dtype=float).tolist()


def _check(name, residual, tol, inputs):
    """Check from a residual array; ``inputs`` maps names to per-case arrays."""
    residual = np.asarray(residual, dtype=float)
    bad = np.flatnonzero(~(residual <= tol))
    ce = {}
    if len(bad):
        i = int(bad[0])
        ce = {k: _tolist(v[i]) for k, v in inputs.items()}
        ce["residual"] = float(residual[i])
    worst = float(np.nanmax(residual)) if residual.size else 0.0
    return Check(name, int(residual.size), int(len(bad)), worst, ce)


def _velocities(rng, n, d, scale=3.0):
    return scale * rng.standard_normal((n, d)) * rng.exponential(1.0, (n, 1))


# ---------------------------------------------------------------------------
# kinematics


def kinematics_suite(cfg, n=10_000, seed=0, tol=1e-12):
    """Conservation, involution and kernel micro-reversibility of both maps."""
    rng = np.random.default_rng(seed)
    d = cfg.d
    v, v1, v2 = (_velocities(rng, n, d) for _ in range(3))
    om = uniform_sphere(rng, n, d)
    Om = uniform_sphere(rng, n, 2 * d)
    out = []

    vp, v1p = binary_collide(v, v1, om)
    scale = np.sum(v * v + v1 * v1, 1) + 1.0
    mom = np.linalg.norm(vp + v1p - v - v1, axis=1) / np.sqrt(scale)
    en = np.abs(np.sum(vp * vp + v1p * v1p - v * v - v1 * v1, 1)) / scale
    back = binary_collide(vp, v1p, om)
    inv = np.linalg.norm(np.concatenate(back, 1) - np.concatenate([v, v1], 1), axis=1)
    inv = inv / np.sqrt(scale)
    k0 = binary_kernel(cfg, v1 - v, om)
    k1 = binary_kernel(cfg, v1p - vp, om)
    rev = np.abs(k1 - k0) / np.maximum(1.0, np.abs(k0))
    ins = {"v": v, "v1": v1, "omega": om}
    out += [_check("binary momentum", mom, tol, ins), _check("binary energy", en, tol, ins),
            _check("binary involution", inv, tol, ins),
            _check("binary micro-reversibility", rev, tol, ins)]

    scale3 = np.sum(v * v + v1 * v1 + v2 * v2, 1) + 1.0
    ins3 = {"v": v, "v1": v1, "v2": v2, "omega": Om}
    for mode in ("central", "adjacent"):
        a, b, c = ternary_collide(v, v1, v2, Om, mode)
        mom = np.linalg.norm(a + b + c - v - v1 - v2, axis=1) / np.sqrt(scale3)
        en = np.abs(np.sum(a * a + b * b + c * c - v * v - v1 * v1 - v2 * v2, 1)) / scale3
        back = ternary_collide(a, b, c, Om, mode)
        inv = np.linalg.norm(np.concatenate(back, 1) - np.concatenate([v, v1, v2], 1), axis=1)
        inv = inv / np.sqrt(scale3)
        out += [_check(f"ternary {mode} momentum", mom, tol, ins3),
                _check(f"ternary {mode} energy", en, tol, ins3),
                _check(f"ternary {mode} involution", inv, tol, ins3)]
    a, b, c = ternary_collide(v, v1, v2, Om)
    U0 = np.concatenate([v1 - v, v2 - v], 1)
    U1 = np.concatenate([b - a, c - a], 1)
    k0 = ternary_kernel(cfg, U0, u_tilde_norm(v, v1, v2), Om)
    k1 = ternary_kernel(cfg, U1, u_tilde_norm(a, b, c), Om)
    rev = np.abs(k1 - k0) / np.maximum(1.0, np.abs(k0))
    out.append(_check("ternary micro-reversibility", rev, tol, ins3))
    out += energy_fraction_checks(rng, d, min(n, 10_000))
    return out


def energy_fraction_checks(rng, d, n, tol_sum=1e-12, tol_energy=1e-10):
    """Fractions sum to one and reproduce the post-collision energies."""
    v, v1, v2 = (_velocities(rng, n, d) for _ in range(3))
    Om = uniform_sphere(rng, n, 2 * d)
    sums = np.empty(n)
    errs = np.empty(n)
    for i in range(n):
        fr = scattering_frame(v[i], v1[i], v2[i], Om[i])
        mu = energy_fractions(fr.xi1, fr.alpha, fr.sigma, fr.v_hat)
        sums[i] = abs(sum(mu) - 1.0)
        post = ternary_collide(v[i], v1[i], v2[i], Om[i])
        e = np.array([bracket(x) ** 2 for x in post])
        errs[i] = np.max(np.abs(np.array(mu) * fr.energy - e)) / fr.energy
    ins = {"v": v, "v1": v1, "v2": v2, "omega": Om}
    return [_check("energy fractions sum", sums, tol_sum, ins),
            _check("energy fractions match post energies", errs, tol_energy, ins)]


# ---------------------------------------------------------------------------
# appendix-type inequalities


def lemma_suite(cfg, n=10_000, seed=0):
    """Elementary inequalities on random inputs, ``n`` cases each."""
    rng = np.random.default_rng(seed)
    d = cfg.d
    out = []
    rel = 1e-10

    # interpolation on random discrete measures
    res = np.empty(n)
    ins = {"s1": np.empty(n), "s": np.empty(n), "s2": np.empty(n)}
    for i in range(n):
        b = bracket(_velocities(rng, 8, d))
        w = rng.uniform(0.1, 1.0, 8)
        s1, s2 = np.sort(rng.uniform(0, 8, 2))
        s = rng.uniform(s1, s2)
        m = lambda k: float(np.sum(w * b ** k))
        res[i] = m(s) / interpolation_bound(m(s1), m(s2), s1, s, s2) - 1.0
        ins["s1"][i], ins["s"][i], ins["s2"][i] = s1, s, s2
    out.append(_check("interpolation", res, rel, ins))

    # product of moments: m_i m_j <= m_k m_l, i + j = k + l, min(k,l) <= min(i,j)
    res = np.empty(n)
    for i in range(n):
        b = bracket(_velocities(rng, 8, d))
        w = rng.uniform(0.1, 1.0, 8)
        m = lambda k: float(np.sum(w * b ** k))
        a, c = rng.uniform(0, 6, 2)
        lo = min(a, c) * rng.uniform()
        k, l = lo, a + c - lo
        res[i] = m(a) * m(c) / (m(k) * m(l)) - 1.0
    out.append(_check("product of moments", res, rel, {}))

    x, y, z = (rng.exponential(3.0, n) for _ in range(3))
    p = rng.uniform(1.0001, 10.0, n)
    gap, bound = polynomial_gap_bound_vec(p, x, y)
    out.append(_check("binary polynomial gap", gap - bound * (1 + rel), 0.0,
                      {"p": p, "x": x, "y": y}))
    p3 = rng.uniform(2.0001, 10.0, n)
    gap, bound = polynomial_gap_bound_vec(p3, x, y, z)
    out.append(_check("ternary polynomial gap", gap - bound * (1 + rel), 0.0,
                      {"p": p3, "x": x, "y": y, "z": z}))
    lhs, rhs = power_sum_bound(p, x, y)
    out.append(_check("binary power sum", lhs - rhs * (1 + rel), 0.0, {"p": p, "x": x, "y": y}))
    lhs, rhs = power_sum_bound(p, x, y, z)
    out.append(_check("ternary power sum", lhs - rhs * (1 + rel), 0.0,
                      {"p": p, "x": x, "y": y, "z": z}))

    k = rng.uniform(2.0001, 12.0, n)
    mu = rng.uniform(0, 1, n)
    xs = rng.exponential(5.0, n)
    nn = rng.uniform(1.0, 30.0, n)
    dil = np.array([convex_dilation_gap(lambda t: psi_approx(t, nn[i], k[i]), mu[i], xs[i])
                    for i in range(n)])
    out.append(_check("convex dilation", -dil, 1e-9 * (1 + xs ** (k / 2)),
                      {"k": k, "mu": mu, "x": xs, "n": nn}))
    n2 = nn * rng.uniform(1.0, 3.0, n)
    lo = np.array([psi_approx(xs[i], nn[i], k[i]) for i in range(n)])
    hi = np.array([psi_approx(xs[i], n2[i], k[i]) for i in range(n)])
    top = xs ** (k / 2)
    out.append(_check("psi_n nondecreasing in n", lo - hi, 1e-12 * (1 + top),
                      {"k": k, "x": xs, "n": nn, "n2": n2}))
    out.append(_check("psi_n below the power", hi - top, 1e-12 * (1 + top),
                      {"k": k, "x": xs, "n": n2}))

    v, v1, v2 = (_velocities(rng, n, d) for _ in range(3))
    lower, value, upper = potential_envelope(cfg, v, v1)
    sc = 1.0 + upper
    out.append(_check("binary potential envelope", np.maximum(lower - value, value - upper) / sc,
                      1e-12, {"v": v, "v1": v1}))
    for perm in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
        lower, value, upper = potential_envelope(cfg, v, v1, v2, perm)
        sc = 1.0 + upper
        out.append(_check(f"ternary potential envelope {perm}",
                          np.maximum(lower - value, value - upper) / sc, 1e-12,
                          {"v": v, "v1": v1, "v2": v2}))
    out.append(series_check(rng, max(100, n // 10)))
    return out


def polynomial_gap_bound_vec(p, x, y, z=None):
    """Vectorized :func:`polynomial_gap_bound` over per-case exponents."""
    gaps, bounds = np.empty(len(p)), np.empty(len(p))
    for i, pi in enumerate(p):
        g, b = polynomial_gap_bound(pi, x[i], y[i], None if z is None else z[i])
        gaps[i], bounds[i] = g, b
    return gaps, bounds


def series_check(rng, n, n_max=12):
    """Partial-sum inequalities for random nonnegative moment sequences."""
    res = np.empty(n)
    ins = {"s": np.empty(n), "z": np.empty(n), "gamma": np.empty(n), "n": np.empty(n)}
    for i in range(n):
        s = rng.choice([0.5, 1.0, 2.0])
        g = rng.choice([0.0, 0.5, 1.0, 2.0])
        z = rng.uniform(0.01, 2.0)
        nn = int(rng.integers(1, n_max + 1))
        p0 = int(rng.integers(0, nn + 1))
        table = {}
        keys = sorted({round(s * a + b, 9) for a in range(nn + 1) for b in (0.0, g)})
        for kk in keys:
            table[kk] = rng.exponential(1.0) * rng.uniform(0.1, 10.0) ** rng.uniform(0, 3)
        m = lambda k: table[round(k, 9)]
        w = series_bound_check(m, s, g, z, nn, p0)
        res[i] = max(w.lhs2 - w.rhs2 * (1 + 1e-12), w.lhs3 - w.rhs3 * (1 + 1e-12))
        ins["s"][i], ins["z"][i], ins["gamma"][i], ins["n"][i] = s, z, g, nn
    return _check("partial-sum inequalities", res, 0.0, ins)


# ---------------------------------------------------------------------------
# moment inequalities and stationarity


def gaussian_ensemble(n, d, seed, temperature=1.0, m0=1.0):
    rng = np.random.default_rng(seed)
    return Ensemble.from_mass(np.sqrt(temperature) * rng.standard_normal((n, d)), m0)


def bimodal_ensemble(n, d, seed, separation=2.0, spread=0.5, m0=1.0):
    """Two counter-propagating beams at +-separation e1 with Gaussian spread."""
    rng = np.random.default_rng(seed)
    V = spread * rng.standard_normal((n, d))
    V[:, 0] += np.where(np.arange(n) % 2 == 0, separation, -separation)
    return Ensemble.from_mass(V, m0)


ODI_CASES = ((3.0, None, None), (4.0, 1.0, 4), (4.0, 2.0, 2), (6.0, 1.0, 6), (6.0, 2.0, 3))


def odi_suite(cfg, tables, n=20_000, budget=None, seed=0, nsigma=3.0):
    """Weak-form left side against each right-side form, per ensemble and order."""
    budget = budget or Budget(n_pairs=32_000, n_triples=32_000)
    out = []
    for name, e in (("gaussian", gaussian_ensemble(n, cfg.d, seed)),
                    ("bimodal", bimodal_ensemble(n, cfg.d, seed + 1))):
        for q, s, p in ODI_CASES:
            rep = odi_verify(e, q, cfg, tables, budget, seed, s=s, p=p, nsigma=nsigma)
            for form, ok in rep.passed.items():
                ce = {} if ok else {"ensemble": name, "q": q, "form": form, "lhs": rep.lhs,
                                    "stderr": rep.stderr, "rhs": rep.rhs[form],
                                    "constants": rep.constants}
                out.append(Check(f"odi {name} q={q:g} {form}", 1, int(not ok),
                                 float(-rep.margin_sigma[form]), ce))
    return out


def stationarity_suite(cfg, n=200_000, budget=None, seed=0, nsigma=3.0):
    """Weak form of <v>^4 at a sampled Maxwellian within ``nsigma`` standard errors."""
    budget = budget or Budget(n_pairs=64_000, n_triples=64_000)
    e = gaussian_ensemble(n, cfg.d, seed)
    est = weakform_estimate(e, poly_weight(4.0), cfg, budget, seed)
    z = abs(est.value) / est.stderr
    ce = {} if z <= nsigma else {"value": est.value, "stderr": est.stderr}
    return [Check("maxwellian weak form q=4", 1, int(z > nsigma), float(z), ce)]


def run_suite(name, cfg, tables=None, samples=10_000, seed=0, odi_particles=20_000,
              odi_pairs=32_000):
    if name == "kinematics":
        return kinematics_suite(cfg, samples, seed)
    if name == "lemmas":
        return lemma_suite(cfg, samples, seed)
    if name == "odi":
        return odi_suite(cfg, tables, odi_particles, Budget(odi_pairs, odi_pairs), seed)
    if name == "stationarity":
        return stationarity_suite(cfg, seed=seed)
    raise ValueError(f"unknown suite {name!r}")

