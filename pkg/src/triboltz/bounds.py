"""Explicit constants of the moment theory and the envelopes built from them.

Constants are assembled from cutoff norms and coercive values supplied by a
:class:`~triboltz.povzner.CoerciveTables`-like object exposing ``norm2``,
``norm3``, ``alpha(k)`` and ``lam(k)``, where ``alpha(k)`` is the coercive
value at order k (that is, alpha_{k/2}).
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .kernels import potential_constants
from .kinematics import bracket
from .moments import c2p, c3p, povzner_sums


def _coercive_gaps(q, tables):
    a, lam = tables.alpha(q), tables.lam(q)
    g2, g3 = tables.norm2 - a, tables.norm3 - lam
    if not g2 > 0:
        raise NumericalFailureError(
            f"binary coercive gap ||b2|| - alpha at order {q} is {g2:.3e} (alpha={a:.6g})", best=g2)
    if not g3 > 0:
        raise NumericalFailureError(
            f"ternary coercive gap ||b3|| - lambda at order {q} is {g3:.3e} (lambda={lam:.6g})",
            best=g3)
    return a, lam, g2, g3


def interpolation_theta(q, g):
    """Exponent (q-2)/(q+g) + g/(q+g-2) of the interpolation-Young step; below 1."""
    return (q - 2.0) / (q + g) + g / (q + g - 2.0)


def young_b(q, g, m2):
    """Explicit bound m2^{((g+2)(q+g-2) + (q-2)(q+g)) / (2(q-2))} on B_{q,g}."""
    return m2 ** (((g + 2.0) * (q + g - 2.0) + (q - 2.0) * (q + g)) / (2.0 * (q - 2.0)))


@dataclass
class OdiConstants:
    """Constants of the two moment differential inequalities at order q."""

    q: float
    Cq: float
    CqPrime: float
    CqTilde: float
    Eq: float
    Dq: float
    inputs: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)

    def rhs_shifted(self, mq, mq_g2, mq_g3):
        """C_q m_q - C_q' (m_{q+gamma2} + m_{q+gamma3})."""
        return self.Cq * mq - self.CqPrime * (mq_g2 + mq_g3)

    def rhs_power(self, mq):
        """C_q m_q - C~_q (m_q^{1+gamma2/(q-2)} + m_q^{1+gamma3/(q-2)})."""
        g2, g3 = self.inputs["gamma2"], self.inputs["gamma3"]
        e = self.q - 2.0
        return self.Cq * mq - self.CqTilde * (mq ** (1 + g2 / e) + mq ** (1 + g3 / e))


def odi_constants(q, m0, m2, cfg, tables):
    """C_q, C_q' and C~_q for moment order q > 2 and conserved (m0, m2)."""
    if not q > 2:
        raise InvalidInputError("moment order q must exceed 2")
    if not (m0 > 0 and m2 > 0):
        raise InvalidInputError("m0 and m2 must be positive")
    g2, g3, th = cfg.gamma2, cfg.gamma3, cfg.theta3
    a, lam, gap2, gap3 = _coercive_gaps(q, tables)
    r = 0.5 * q
    cg2, cg3 = potential_constants(cfg)
    amp2 = a * c2p(r) * cg2
    amp3 = lam * c3p(r) * cg3
    loss2 = gap2 * 2.0 ** (-g2 / 2) * m0
    loss3 = 0.5 * gap3 * 3.0 ** (-th / 2) * (2.0 / 3.0) ** (g3 / 2) * m0 ** 2
    th2, th3 = interpolation_theta(q, g2), interpolation_theta(q, g3)
    eps2 = loss2 / (2.0 * amp2 * th2)
    eps3 = loss3 / (2.0 * amp3 * th3)
    B2, B3 = young_b(q, g2, m2), young_b(q, g3, m2)
    Eq = (amp2 * eps2 ** (-th2 / (1 - th2)) * B2
          + amp3 * eps3 ** (-th3 / (1 - th3)) * B3)
    Dq = (amp2 * m2 + gap2 * m2 + 2.0 * amp3 * m2 ** 2
          + gap3 * 3.0 ** (-th / 2) * m2 ** 2)
    Cq = Eq / m0 + Dq
    Cp = min(0.5 * loss2, 0.5 * loss3)
    Ct = Cp * (m2 ** (-g2 / (q - 2)) + m2 ** (-g3 / (q - 2)))
    inputs = {"m0": m0, "m2": m2, "alpha": a, "lambda": lam, "norm2": tables.norm2,
              "norm3": tables.norm3, "gamma2": g2, "gamma3": g3, "theta3": th}
    parts = {"theta2": th2, "theta3_interp": th3, "eps2": eps2, "eps3": eps3,
             "B2": B2, "B3": B3, "C2r": c2p(r), "C3r": c3p(r), "Cg2": cg2, "Cg3": cg3}
    for name, val in (("C_q", Cq), ("C_q'", Cp), ("C~_q", Ct)):
        if not (np.isfinite(val) and val > 0):
            raise NumericalFailureError(f"{name} at order {q} is {val!r}", best=val)
    # fault-injection hook: tables.overrides may replace the assembled constants
    over = getattr(tables, "overrides", {})
    Cq = over.get(("C", float(q)), Cq)
    Cp = over.get(("C_prime", float(q)), Cp)
    Ct = over.get(("C_tilde", float(q)), Ct)
    return OdiConstants(float(q), Cq, Cp, Ct, Eq, Dq, inputs, parts)


def bernoulli_flow(t, odi, gamma_i, y0=None):
    """Solution of y' = C y - C~ y^{1+gamma_i/(q-2)}.

    ``y0=None`` selects the branch that blows up at t = 0; otherwise y(0) = y0.
    """
    t = np.asarray(t, dtype=float)
    if gamma_i <= 0:
        raise InvalidInputError("Bernoulli flow needs gamma_i > 0")
    C, Ct, q = odi.Cq, odi.CqTilde, odi.q
    e = gamma_i / (q - 2.0)
    decay = np.exp(-t * C * e)
    if y0 is None:
        if np.any(t <= 0):
            raise InvalidInputError("blow-up branch is defined only for t > 0")
        return (Ct / C) ** (-1.0 / e) * (-np.expm1(-t * C * e)) ** (-1.0 / e)
    if not y0 > 0:
        raise InvalidInputError("initial value must be positive")
    return (y0 ** (-e) * decay + (Ct / C) * (-np.expm1(-t * C * e))) ** (-1.0 / e)


def log_k_qi(odi, gamma_i):
    """log K_{q,i}; the e^{C_q} factor makes the direct form overflow easily."""
    C, Ct, q = odi.Cq, odi.CqTilde, odi.q
    p = (2.0 - q) / gamma_i
    x = C * gamma_i / (q - 2.0)
    late = p * np.log(-np.expm1(-x))
    early = C + p * np.log(x)
    return p * np.log(Ct / C) + max(late, early)


def _exp(x):
    with np.errstate(over="ignore"):
        return float(np.exp(x))


@dataclass
class EnvelopeSet:
    """Generation constants K_{q,i}, K_q and the propagation bound M_q."""

    q: float
    gammas: dict
    logK: dict
    logKq: float
    odi: OdiConstants
    logMq: float | None = None

    @property
    def K(self):
        return {i: _exp(v) for i, v in self.logK.items()}

    @property
    def Kq(self):
        return _exp(self.logKq)

    @property
    def Mq(self):
        return None if self.logMq is None else _exp(self.logMq)

    def log_single(self, t, i):
        """log of K_{q,i} max{1, t^{(2-q)/gamma_i}}."""
        t = np.asarray(t, dtype=float)
        p = (2.0 - self.q) / self.gammas[i]
        return self.logK[i] + np.maximum(0.0, p * np.log(t))

    def log_combined(self, t):
        """log of K_q max{1, min_i t^{(2-q)/gamma_i}} over the positive gammas."""
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        pw = np.min([(2.0 - self.q) / g * lt for g in self.gammas.values()], axis=0)
        return self.logKq + np.maximum(0.0, pw)

    def single(self, t, i):
        with np.errstate(over="ignore"):
            return np.exp(self.log_single(t, i))

    def combined(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self.log_combined(t))

    def crossing_time(self):
        """Time where the two power branches meet (1 when both are active), or None."""
        return 1.0 if len(self.gammas) == 2 else None

    def with_propagation(self, mq0):
        """Copy with M_q = max{m_q(0) e^{C_q}, K_q}."""
        logm = max(np.log(mq0) + self.odi.Cq, self.logKq)
        return EnvelopeSet(self.q, self.gammas, self.logK, self.logKq, self.odi, logm)

    def to_dict(self):
        return {"q": self.q, "gammas": self.gammas, "logK": self.logK, "logKq": self.logKq,
                "K": self.K, "Kq": self.Kq, "logMq": self.logMq, "Mq": self.Mq}


def generation_envelope(q, odi, gamma2, gamma3):
    """:class:`EnvelopeSet` with one constant per positive gamma_i."""
    gammas = {i: g for i, g in ((2, gamma2), (3, gamma3)) if g > 0}
    if not gammas:
        raise InvalidInputError("generation needs gamma2 > 0 or gamma3 > 0")
    logK = {i: float(log_k_qi(odi, g)) for i, g in gammas.items()}
    return EnvelopeSet(float(q), gammas, logK, max(logK.values()), odi)


def exp_lemma_constants(sp, m0, m2, cfg, tables):
    """(K_1, K_2, K_3) of the order-sp moment inequality used for exponential moments."""
    if not sp > 2:
        raise InvalidInputError("sp must exceed 2")
    _, _, gap2, gap3 = _coercive_gaps(sp, tables)
    k1 = 2.0 ** (1 - cfg.gamma2 / 2) * m0 * gap2
    k2 = 3.0 * (2.0 / 3.0) ** (cfg.gamma3 / 2) * m0 ** 2 * gap3
    k3 = 2.0 * m2 * gap2 + 6.0 * m0 * m2 * gap3
    return k1, k2, k3


def exp_lemma_rhs(m, p, s, m0, m2, cfg, tables):
    """Right side -K1 m_{sp+g2} - K2 m_{sp+g3} + K3 m_sp + 2 C_g2 alpha S2 + 3 C_g3 lambda S3."""
    sp = s * p
    k1, k2, k3 = exp_lemma_constants(sp, m0, m2, cfg, tables)
    cg2, cg3 = potential_constants(cfg)
    s2, _ = povzner_sums(m, p, s, cfg.gamma2)
    _, s3 = povzner_sums(m, p, s, cfg.gamma3)
    return (-k1 * m(sp + cfg.gamma2) - k2 * m(sp + cfg.gamma3) + k3 * m(sp)
            + 2.0 * cg2 * tables.alpha(sp) * s2 + 3.0 * cg3 * tables.lam(sp) * s3)


@dataclass
class WellposedConstants:
    """Constants of the invariant-set construction at order 2 + 2 gamma."""

    q: float
    C: float
    Ctilde: float
    xStar: float
    LStar: float
    A: float

    def L(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.C * x - 0.5 * self.Ctilde * x ** 1.5


def wellposed_constants(m0, m2, cfg, tables):
    """x*, L* and A_{2+2gamma} = x* + L* from the order-(2+2gamma) constants."""
    q = 2.0 + 2.0 * cfg.gamma
    odi = odi_constants(q, m0, m2, cfg, tables)
    return wellposed_from(q, odi.Cq, odi.CqTilde)


def wellposed_from(q, C, Ct):
    ratio = (4.0 * C / Ct) ** 2
    L_star = 8.0 / 27.0 * ratio * C
    return WellposedConstants(q, C, Ct, ratio, L_star, ratio + L_star)


def frequency_constant(m0, m2, cfg, norm2, norm3):
    """C with nu2 + 3 nu3 <= C (1 + <v>^gamma2 + <v>^gamma3).

    m_gamma is replaced by max(m0, m2), which dominates it for gamma <= 2.
    """
    cg2, cg3 = potential_constants(cfg)
    mg = max(m0, m2)
    c2 = cg2 * norm2 * mg
    c3 = cg3 * norm3 * max(2.0 * m0 * mg, m0 * m0)
    return c2 + 3.0 * c3


def collision_frequency_majorant(v, m0, m2, cfg, norm2, norm3):
    """C (1 + <v>^gamma2 + <v>^gamma3) bounding the total collision frequency."""
    b = bracket(v)
    return frequency_constant(m0, m2, cfg, norm2, norm3) * (
        1.0 + b ** cfg.gamma2 + b ** cfg.gamma3)


@dataclass
class BoundReport:
    """Constants with their provenance hashes, serializable to JSON."""

    config_digest: str
    tables_digest: str
    entries: dict

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=float)
