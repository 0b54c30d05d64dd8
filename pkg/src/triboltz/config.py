"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment. Lists are comma separated;
mixture components are ``weight : mean_x, mean_y : temperature`` separated
by ``;``. Unknown keys are rejected.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

from .dsmc import LAWS, InitialData, SimConfig
from .errors import InvalidInputError, TriboltzError
from .kernels import KernelConfig, Profile


class ConfigError(TriboltzError, ValueError):
    """Malformed file or a value violating a model hypothesis."""


@dataclass(frozen=True)
class HarnessConfig:
    """Settings of the harness commands that are not part of the simulation."""

    orders: tuple = (4.0,)
    exp_s: float | None = None
    exp_z: float = 0.5
    exp_n: int = 8
    exp_threshold: float = 4.0
    envelope_order: float = 4.0
    envelope_sigma: float = 3.0
    verify_samples: int = 10_000
    odi_particles: int = 20_000
    odi_pairs: int = 32_000


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def to_dict(self):
        from dataclasses import asdict

        return {"kernel": self.kernel.to_dict(), "sim": self.sim.to_dict(),
                "harness": asdict(self.harness)}


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _components(text):
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        w, mean, temp = part.split(":")
        out.append((float(w), _floats(mean), float(temp)))
    return tuple(out)


KERNEL_KEYS = {"d": int, "gamma2": float, "gamma3": float, "theta3": float,
               "b2": _floats, "phi": _floats, "b2_sup": float, "phi_sup": float}
SIM_KEYS = {"n": int, "dt": float, "t_end": float, "seed": int, "m0": float,
            "truncation_r": _optional_float, "output_orders": _floats, "output_every": int,
            "trace_order": float, "binary": _bool, "ternary": _bool,
            "max_candidates": float, "safety": float, "snapshot_times": _floats}
INITIAL_KEYS = {"initial": str, "temperature": float, "mean": _floats,
                "components": _components, "radius": float}
HARNESS_KEYS = {"orders": _floats, "exp_s": _optional_float, "exp_z": float, "exp_n": int,
                "exp_threshold": float, "envelope_order": float, "envelope_sigma": float,
                "verify_samples": int, "odi_particles": int, "odi_pairs": int}
ALL_KEYS = {**KERNEL_KEYS, **SIM_KEYS, **INITIAL_KEYS, **HARNESS_KEYS}

# hypothesis named in the error for each constrained key
HYPOTHESES = {
    "gamma2": "gamma2 in [0, 2] (hard or Maxwell potential with angular cutoff)",
    "gamma3": "gamma3 in [0, 2] (hard or Maxwell potential with angular cutoff)",
    "theta3": "theta3 >= 0 (ternary angular exponent)",
    "d": "dimension d >= 2",
    "b2": "b2 even and nonnegative on [-1, 1] (symmetrized angular kernel)",
    "phi": "phi nonnegative on [-1/2, 1/2]",
    "exp_s": "exponential order s in (0, 2]",
    "orders": "moment order q > 2",
    "envelope_order": "moment order q > 2",
    "n": "N >= 2 for binary and N >= 3 for ternary events",
    "dt": "dt > 0",
    "truncation_r": "truncation radius R >= 1",
    "radius": "ball radius R >= 1",
}


def parse_text(text, source="<string>"):
    """Parse configuration text into a :class:`RunConfig`."""
    raw, lines = {}, {}
    for ln, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{ln}: expected 'key = value', got {body!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in ALL_KEYS:
            raise ConfigError(f"{source}:{ln}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{ln}: duplicate key {key!r}")
        try:
            raw[key] = ALL_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{ln}: bad value for {key!r}: {exc}") from None
        lines[key] = ln
    return build(raw, lines, source)


def _fail(key, lines, source, msg):
    where = f"{source}:{lines[key]}: " if key in lines else f"{source}: "
    hyp = HYPOTHESES.get(key)
    tail = f" (violates hypothesis: {hyp})" if hyp else ""
    raise ConfigError(f"{where}{key}: {msg}{tail}")


def build(raw, lines=None, source="<dict>"):
    """Validate parsed values and assemble the run configuration."""
    lines = lines or {}
    for key in ("gamma2", "gamma3"):
        if key in raw and not 0.0 <= raw[key] <= 2.0:
            _fail(key, lines, source, f"value {raw[key]} outside [0, 2]")
    g2, g3 = raw.get("gamma2", 1.0), raw.get("gamma3", 1.0)
    if max(g2, g3) <= 0:
        key = "gamma3" if "gamma3" in raw else "gamma2"
        raise ConfigError(
            f"{source}:{lines.get(key, '?')}: gamma2 = gamma3 = 0 violates hypothesis "
            "gamma = max(gamma2, gamma3) > 0 (strictly hard interactions)")
    if raw.get("theta3", 0.0) < 0:
        _fail("theta3", lines, source, "must be nonnegative")
    if raw.get("d", 2) < 2:
        _fail("d", lines, source, "must be at least 2")
    s = raw.get("exp_s")
    if s is not None and not 0 < s <= 2:
        _fail("exp_s", lines, source, f"value {s} outside (0, 2]")
    for key in ("orders", "envelope_order"):
        vals = raw.get(key)
        if vals is not None and min(vals if isinstance(vals, tuple) else (vals,)) <= 2:
            _fail(key, lines, source, "orders must exceed 2")
    try:
        b2 = Profile(raw.get("b2", (1.0,)), 1.0, raw.get("b2_sup"))
    except InvalidInputError as exc:
        _fail("b2", lines, source, str(exc))
    try:
        phi = Profile(raw.get("phi", (1.0,)), 0.5, raw.get("phi_sup"))
    except InvalidInputError as exc:
        _fail("phi", lines, source, str(exc))
    try:
        kernel = KernelConfig(d=raw.get("d", 2), gamma2=g2, gamma3=g3,
                              theta3=raw.get("theta3", 0.0), b2=b2, phi=phi)
    except InvalidInputError as exc:
        _fail("b2" if "b2" in str(exc) else "d", lines, source, str(exc))
    law = raw.get("initial", "maxwellian")
    if law not in LAWS:
        _fail("initial", lines, source, f"unknown law {law!r}; choose from {', '.join(LAWS)}")
    if law == "compact_ball" and raw.get("radius", 3.0) < 1:
        _fail("radius", lines, source, "must be at least 1")
    init = InitialData(law=law, temperature=raw.get("temperature", 1.0),
                       mean=raw.get("mean", ()), components=raw.get("components", ()),
                       radius=raw.get("radius", 3.0))
    if init.temperature <= 0:
        _fail("temperature", lines, source, "must be positive")
    if init.mean and len(init.mean) != kernel.d:
        _fail("mean", lines, source, f"needs {kernel.d} components")
    for w, mean, temp in init.components:
        if len(mean) != kernel.d or temp <= 0 or w < 0:
            _fail("components", lines, source, "each needs weight >= 0, a d-vector mean, T > 0")
    sim_kw = {k: raw[k] for k in SIM_KEYS if k in raw}
    if raw.get("truncation_r") is not None and raw["truncation_r"] < 1:
        _fail("truncation_r", lines, source, "must be at least 1")
    try:
        sim = SimConfig(kernel=kernel, initial=init, **sim_kw)
    except InvalidInputError as exc:
        key = next((k for k in ("n", "dt", "t_end", "output_every") if k in str(exc)), "n")
        _fail(key, lines, source, str(exc))
    harness = HarnessConfig(**{k: raw[k] for k in HARNESS_KEYS if k in raw})
    return RunConfig(kernel, sim, harness)


def parse_config(path):
    """Read and validate the configuration file at ``path``."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_text(p.read_text(), str(p))


def with_seed(rc, seed):
    """Copy of ``rc`` with the simulation seed replaced."""
    return replace(rc, sim=replace(rc.sim, seed=int(seed)))
