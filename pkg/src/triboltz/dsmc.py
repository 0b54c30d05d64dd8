"""Stochastic particle integrator for the binary-ternary equation.

Each step draws Poisson numbers of binary and ternary candidates from
global majorants built on R = max |v_i - mean velocity|: a binary relative
speed is at most 2R and |u~| at most 3R. Candidates are thinned by the exact
kernel and applied in draw order. Time is advanced by dt, halved as needed
so that the expected number of candidates stays below ``max_candidates``
times N.
"""

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ._fast import collide_events, ensemble_sums, spread_radius
from .errors import InvalidInputError, NumericalFailureError
from .kernels import KernelConfig
from .moments import Ensemble, MomentVector
from .sphere import sphere_area, uniform_sphere

LAWS = ("maxwellian", "gaussian_mixture", "compact_ball", "point")


@dataclass(frozen=True)
class InitialData:
    """Initial law.

    ``maxwellian``: temperature and mean; ``gaussian_mixture``: ``components``
    as (weight, mean, temperature) triples; ``compact_ball``: uniform in the
    ball <v> <= radius centred at ``mean``; ``point``: all particles at ``mean``.
    """

    law: str = "maxwellian"
    temperature: float = 1.0
    mean: tuple = ()
    components: tuple = ()
    radius: float = 3.0

    def __post_init__(self):
        if self.law not in LAWS:
            raise InvalidInputError(f"unknown initial law {self.law!r}")


@dataclass(frozen=True)
class SimConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    n: int = 10_000
    dt: float = 0.01
    t_end: float = 1.0
    seed: int = 0
    initial: InitialData = field(default_factory=InitialData)
    m0: float = 1.0
    truncation_r: float | None = None
    output_orders: tuple = (2.0, 4.0)
    output_every: int = 1
    trace_order: float = 4.0
    binary: bool = True
    ternary: bool = True
    max_candidates: float = 0.1
    safety: float = 1.2
    snapshot_times: tuple = ()

    def __post_init__(self):
        if self.n < 2 or (self.ternary and self.n < 3):
            raise InvalidInputError("need N >= 2 particles (N >= 3 with ternary events)")
        if not self.dt > 0 or not self.t_end >= 0:
            raise InvalidInputError("dt must be positive and t_end nonnegative")
        if not (self.binary or self.ternary):
            raise InvalidInputError("at least one collision type must be enabled")
        if self.truncation_r is not None and self.truncation_r < 1:
            raise InvalidInputError("truncation radius R must be >= 1")
        if self.output_every < 1:
            raise InvalidInputError("output_every must be >= 1")

    def to_dict(self):
        out = asdict(self)
        out["kernel"] = self.kernel.to_dict()
        return out

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _mean(sc):
    d = sc.kernel.d
    m = np.asarray(sc.initial.mean if len(sc.initial.mean) else np.zeros(d), dtype=float)
    if m.shape != (d,):
        raise InvalidInputError(f"initial mean must have {d} components")
    return m


def init_ensemble(sc):
    """Sample the initial ensemble; weight is m0 / N."""
    rng = np.random.default_rng(np.random.SeedSequence([sc.seed, 0]))
    d, n, ic = sc.kernel.d, sc.n, sc.initial
    if ic.law == "maxwellian":
        V = _mean(sc) + np.sqrt(ic.temperature) * rng.standard_normal((n, d))
    elif ic.law == "gaussian_mixture":
        if not ic.components:
            raise InvalidInputError("gaussian_mixture needs components")
        w = np.array([c[0] for c in ic.components], dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise InvalidInputError("mixture weights must be nonnegative")
        counts = rng.multinomial(n, w / w.sum())
        parts = []
        for (wt, mean, temp), c in zip(ic.components, counts):
            mean = np.asarray(mean, dtype=float)
            if mean.shape != (d,) or temp <= 0:
                raise InvalidInputError("mixture component needs a d-vector mean and T > 0")
            parts.append(mean + np.sqrt(temp) * rng.standard_normal((c, d)))
        V = np.concatenate(parts)
        V = V[rng.permutation(n)]
    elif ic.law == "compact_ball":
        if ic.radius < 1:
            raise InvalidInputError("ball radius R must satisfy R >= 1")
        rad = np.sqrt(ic.radius ** 2 - 1.0)
        dirs = uniform_sphere(rng, n, d)
        V = _mean(sc) + dirs * (rad * rng.uniform(size=(n, 1)) ** (1.0 / d))
    else:
        V = np.broadcast_to(_mean(sc), (n, d)).copy()
    return Ensemble(V, sc.m0 / n)


def truncate_ensemble(e, R):
    """Drop particles with <v> > R; the weight is unchanged, so mass drops."""
    if R < 1:
        raise InvalidInputError("truncation radius R must be >= 1")
    keep = e.brackets() <= R
    if not np.any(keep):
        raise InvalidInputError("truncation removes every particle")
    return Ensemble(e.velocities[keep], e.weight)


@dataclass
class StepStats:
    binary_candidates: int = 0
    binary_accepted: int = 0
    ternary_candidates: int = 0
    ternary_accepted: int = 0
    efficiency_binary: float = 1.0
    efficiency_ternary: float = 1.0
    energy_drift: float = 0.0
    trace_change: float = 0.0
    dt: float = 0.0
    retries: int = 0


def _majorants(V, cfg):
    R = spread_radius(V)
    return (2.0 * R) ** cfg.gamma2 * cfg.b2.sup, (3.0 * R) ** cfg.gamma3 * cfg.phi.sup


def _distinct_rows(rng, n, size, k):
    i = rng.integers(0, n, size)
    j = rng.integers(0, n - 1, size)
    j = j + (j >= i)
    if k == 2:
        return np.stack([i, j, j], axis=1)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    m = rng.integers(0, n - 2, size)
    m = m + (m >= lo)
    m = m + (m >= hi)
    return np.stack([i, j, m], axis=1)


class Simulator:
    """Holds the ensemble, RNG and kernel arrays of one run."""

    def __init__(self, sc, ensemble=None):
        self.sc = sc
        self.cfg = sc.kernel
        self.e = ensemble if ensemble is not None else init_ensemble(sc)
        self.rng = np.random.default_rng(np.random.SeedSequence([sc.seed, 1]))
        self.b2c = np.array(self.cfg.b2.coeffs)
        self.phic = np.array(self.cfg.phi.coeffs)
        self.area2 = sphere_area(self.cfg.d)
        self.area3 = sphere_area(2 * self.cfg.d)
        self.t = 0.0

    def _draw(self, dt, lam2, lam3):
        sc, N, w, d = self.sc, self.e.n, self.e.weight, self.cfg.d
        mu2 = dt * 0.5 * w * N * (N - 1) * lam2 * self.area2 if sc.binary else 0.0
        mu3 = (dt * w * w * N * (N - 1) * (N - 2) / 6.0 * lam3 * self.area3
               if sc.ternary else 0.0)
        return mu2, mu3

    def step(self, dt=None):
        """Advance one step; returns :class:`StepStats`."""
        sc, cfg, V = self.sc, self.cfg, self.e.velocities
        dt = sc.dt if dt is None else dt
        N, d = self.e.n, cfg.d
        safety = sc.safety
        for attempt in range(2):
            lam2, lam3 = _majorants(V, cfg)
            lam2 = max(lam2 * safety, 1e-300)
            lam3 = max(lam3 * safety, 1e-300)
            h = dt
            mu2, mu3 = self._draw(h, lam2, lam3)
            while mu2 + mu3 > sc.max_candidates * N:
                h *= 0.5
                mu2, mu3 = self._draw(h, lam2, lam3)
            n2, n3 = int(self.rng.poisson(mu2)), int(self.rng.poisson(mu3))
            kinds = np.concatenate([np.zeros(n2, np.int64), np.ones(n3, np.int64)])
            kinds = kinds[self.rng.permutation(n2 + n3)]
            idx = np.empty((n2 + n3, 3), np.int64)
            idx[kinds == 0] = _distinct_rows(self.rng, N, n2, 2)
            idx[kinds == 1] = _distinct_rows(self.rng, N, n3, 3)
            dirs = np.zeros((n2 + n3, 2 * d))
            dirs[kinds == 0, :d] = uniform_sphere(self.rng, n2, d)
            dirs[kinds == 1] = uniform_sphere(self.rng, n3, 2 * d)
            unif = self.rng.uniform(size=n2 + n3)
            backup = V.copy()
            rsq = 0.0 if sc.truncation_r is None else float(sc.truncation_r) ** 2
            st, stop, a2, a3, dtr, den, r2, r3 = collide_events(
                V, kinds, idx, dirs, unif, cfg.gamma2, cfg.gamma3, cfg.theta3,
                self.b2c, self.phic, lam2, lam3, rsq, float(sc.trace_order))
            if st == 0:
                self.t += h
                return StepStats(n2, a2, n3, a3, a2 / n2 if n2 else 1.0,
                                 a3 / n3 if n3 else 1.0, den, dtr * self.e.weight, h, attempt)
            V[...] = backup
            safety = safety * safety * max(r2, r3)
        raise NumericalFailureError(
            f"majorant violated twice at t={self.t:.6g} (ratio {max(r2, r3):.4g})")


@dataclass
class MomentTrajectory:
    """Recorded moments and diagnostics of a run."""

    times: np.ndarray
    orders: np.ndarray
    moments: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    events_binary: np.ndarray
    events_ternary: np.ndarray
    trace_times: np.ndarray
    trace: np.ndarray
    trace_order: float
    steps: int
    retries: int
    snapshots: dict
    drift: dict

    def moment_vector(self, r):
        return MomentVector(self.orders, self.moments[r])

    def column(self, k):
        i = int(np.flatnonzero(np.abs(self.orders - k) < 1e-9)[0])
        return self.moments[:, i]

    def to_csv(self, exp=None):
        """CSV text; ``exp`` = (s, z, n) adds the partial exponential sum column."""
        from .moments import exp_partial_sums_from

        d = self.momentum.shape[1]
        head = ["t", "m0"] + ["p" + "xyzw"[a] if a < 4 else f"p{a}" for a in range(d)]
        head += ["m2"] + [f"m_{k:g}" for k in self.orders]
        if exp is not None:
            head.append("E_partial")
        head += ["events_binary", "events_ternary"]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(head)
        for r, t in enumerate(self.times):
            m = self.moment_vector(r)
            row = [repr(float(t)), repr(float(m(0) if 0 in self.orders else self.drift["m0"]))]
            row += [repr(float(x)) for x in self.momentum[r]]
            row += [repr(float(m(0) + self.energy[r]))] + [repr(float(x)) for x in self.moments[r]]
            if exp is not None:
                s, z, n = exp
                row.append(repr(exp_partial_sums_from(m, s, z, n)))
            row += [int(self.events_binary[r]), int(self.events_ternary[r])]
            wr.writerow(row)
        return buf.getvalue()


def run(sc, ensemble=None, progress=None):
    """Integrate to ``t_end`` and record moments every ``output_every`` steps."""
    sim = Simulator(sc, ensemble)
    orders = np.asarray(sorted(set(float(k) for k in (0.0,) + tuple(sc.output_orders))))
    w = sim.e.weight
    V = sim.e.velocities
    p0 = V.sum(axis=0) * w
    e0 = float(np.sum(V * V)) * w

    rec_t, rec_m, rec_p, rec_e, rec_b, rec_tr = [], [], [], [], [], []
    snaps = {}
    pending = sorted(sc.snapshot_times)
    cb = ct = 0

    def record():
        sums, mom, en = ensemble_sums(V, orders)
        rec_t.append(sim.t)
        rec_m.append(w * sums)
        rec_p.append(w * mom)
        rec_e.append(w * en)
        rec_b.append(cb)
        rec_tr.append(ct)

    trace_t = [0.0]
    trace = [w * float(ensemble_sums(V, np.array([float(sc.trace_order)]))[0][0])]
    record()
    steps = retries = 0
    eps = 1e-12 * max(1.0, sc.t_end)
    while sim.t < sc.t_end - eps:
        while pending and pending[0] <= sim.t + eps:
            snaps[pending.pop(0)] = (sim.t, V.copy())
        h = min(sc.dt, sc.t_end - sim.t)
        if pending:
            h = min(h, pending[0] - sim.t)
        st = sim.step(h)
        steps += 1
        retries += st.retries
        cb += st.binary_accepted
        ct += st.ternary_accepted
        trace_t.append(sim.t)
        trace.append(trace[-1] + st.trace_change)
        if steps % sc.output_every == 0:
            record()
        if progress is not None:
            progress(sim.t, st)
    while pending:
        snaps[pending.pop(0)] = (sim.t, V.copy())
    if rec_t[-1] != sim.t:
        record()
    p1, e1 = w * V.sum(axis=0), w * float(np.sum(V * V))
    drift = {"m0": float(sim.e.mass),
             "momentum": float(np.linalg.norm(p1 - p0) / max(1.0, np.linalg.norm(p0))),
             "energy": abs(e1 - e0) / max(1.0, abs(e0))}
    return MomentTrajectory(
        times=np.array(rec_t), orders=orders, moments=np.array(rec_m), momentum=np.array(rec_p),
        energy=np.array(rec_e), events_binary=np.array(rec_b), events_ternary=np.array(rec_tr),
        trace_times=np.array(trace_t), trace=np.array(trace), trace_order=float(sc.trace_order),
        steps=steps, retries=retries, snapshots=snaps, drift=drift), sim.e
