"""Command line entry point.

Exit codes: 0 success, 1 property or envelope failure, 2 usage or
configuration error, 3 numerical failure.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from . import __version__
from .bounds import (BoundReport, frequency_constant, generation_envelope, odi_constants,
                     wellposed_constants)
from .config import ConfigError, parse_config, with_seed
from .dsmc import init_ensemble, run
from .kernels import cutoff_norm
from .errors import InvalidInputError, NumericalFailureError
from .moments import exp_partial_sums_from, moment
from .povzner import CoerciveTables
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DIRECTION_TOL = 1e-6
OVERRIDE_KINDS = ("alpha", "lambda", "C", "C_prime", "C_tilde")


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(out, name, text):
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _manifest(rc, args, outputs, tables=None, extra=None, started=None):
    m = {"command": args.command, "tool_version": __version__, "seed": rc.sim.seed,
         "config": rc.to_dict(), "config_digest": rc.sim.digest(),
         "coercive_tables": tables.digest() if tables is not None else None,
         "outputs": {p.name: {"path": str(p), "sha256": sha(p)} for p in outputs},
         "wall_clock_s": None if started is None else round(time.time() - started, 3)}
    if extra:
        m.update(extra)
    return json.dumps(m, indent=2, sort_keys=True, default=float)


def _parse_overrides(items):
    out = {}
    for item in items or ():
        try:
            key, value = item.split("=")
            kind, k = key.split(":")
            v = float(value)
            if kind not in OVERRIDE_KINDS or not np.isfinite(v):
                raise ValueError
            k = float(k)
        except ValueError:
            raise ConfigError(f"bad --override {item!r}; expected KIND:K=VALUE with KIND in "
                              f"{', '.join(OVERRIDE_KINDS)}") from None
        if kind.startswith("C") and v <= 0:
            raise ConfigError(f"--override {item!r}: inequality constants must be positive")
        out[(kind, k)] = v
    return out


def _tables(rc, args):
    tables = CoerciveTables(rc.kernel)
    tables.overrides.update(_parse_overrides(getattr(args, "override", None)))
    return tables


def constants_report(rc, tables, orders=None):
    """:class:`BoundReport` for each requested order, with the initial moments."""
    cfg = rc.kernel
    e = init_ensemble(rc.sim)
    b = e.brackets()
    m0, m2 = moment(e, 0, b), moment(e, 2, b)
    entries = {"m0": m0, "m2": m2, "norm2": tables.norm2, "norm3": tables.norm3,
               "frequency_C": frequency_constant(m0, m2, cfg, tables.norm2, tables.norm3)}
    for q in orders or rc.harness.orders:
        if not q > 2:
            raise InvalidInputError(f"moment order {q} must exceed 2")
        odi = odi_constants(q, m0, m2, cfg, tables)
        env = generation_envelope(q, odi, cfg.gamma2, cfg.gamma3).with_propagation(moment(e, q, b))
        entries[f"q={q:g}"] = {
            "alpha": tables.alpha(q), "lambda": tables.lam(q), "C": odi.Cq,
            "C_prime": odi.CqPrime, "C_tilde": odi.CqTilde, "E": odi.Eq, "D": odi.Dq,
            "logK": {str(i): v for i, v in env.logK.items()}, "logKq": env.logKq,
            "Kq": env.Kq, "logMq": env.logMq, "Mq": env.Mq, "parts": odi.parts}
    wp = wellposed_constants(m0, m2, cfg, tables)
    entries["wellposed"] = asdict(wp)
    entries["norm3_direction_variation"] = cutoff_norm(cfg, "ternary", tables.quad).direction_variation
    return BoundReport(cfg.digest(), tables.digest(), entries)


def cmd_constants(rc, args):
    t = time.time()
    tables = _tables(rc, args)
    rep = constants_report(rc, tables)
    out = Path(args.out)
    path = _write(out, "constants.json", rep.to_json())
    print(f"{'q':>5} {'alpha':>10} {'lambda':>10} {'C_q':>12} {'C_q prime':>12} "
          f"{'C~_q':>12} {'log K_q':>12}")
    for key, v in rep.entries.items():
        if key.startswith("q="):
            print(f"{key[2:]:>5} {v['alpha']:10.6g} {v['lambda']:10.6g} {v['C']:12.5e} "
                  f"{v['C_prime']:12.5e} {v['C_tilde']:12.5e} {v['logKq']:12.5e}")
    wp = rep.entries["wellposed"]
    var = rep.entries["norm3_direction_variation"]
    if var > DIRECTION_TOL:
        print(f"warning: ||b3|| varies by {var:.3e} (relative) over reference directions; "
              "the ternary constants use the e1 value", file=sys.stderr)
    print(f"A_(2+2gamma) = {wp['A']:.6e}  (q = {wp['q']:g}, x* = {wp['xStar']:.6e})")
    _write(out, "manifest.json", _manifest(rc, args, [path], tables, started=t))
    return EXIT_OK


def cmd_verify(rc, args):
    suites = SUITES if args.suite == "all" else (args.suite,)
    tables = _tables(rc, args) if "odi" in suites else None
    h = rc.harness
    report, first = {}, None
    for name in suites:
        checks = run_suite(name, rc.kernel, tables, h.verify_samples, rc.sim.seed,
                           h.odi_particles, h.odi_pairs)
        report[name] = [c.to_dict() for c in checks]
        for c in checks:
            print(f"{'PASS' if c.ok else 'FAIL'} {name}: {c.name} "
                  f"({c.violations}/{c.cases} violations)")
            if not c.ok and first is None:
                first = {"suite": name, "check": c.name, "counterexample": c.counterexample}
    ok = first is None
    out = Path(args.out)
    path = _write(out, "verify.json", json.dumps(
        {"ok": ok, "suites": report, "first_counterexample": first}, indent=2, default=float))
    _write(out, "manifest.json", _manifest(rc, args, [path], tables))
    if not ok:
        print(json.dumps(first, default=float), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _exp_settings(rc):
    h = rc.harness
    s = h.exp_s if h.exp_s is not None else rc.kernel.gamma
    return s, h.exp_n


def cmd_simulate(rc, args):
    t = time.time()
    s, n = _exp_settings(rc)
    sc = rc.sim
    orders = sorted(set(sc.output_orders) | {s * p for p in range(n + 1)})
    traj, _ = run(replace(sc, output_orders=tuple(orders)))
    out = Path(args.out)
    path = _write(out, "trajectory.csv", traj.to_csv(exp=(s, rc.harness.exp_z, n)))
    extra = {"drift": traj.drift, "steps": traj.steps, "retries": traj.retries}
    _write(out, "manifest.json", _manifest(rc, args, [path], extra=extra, started=t))
    print(f"steps={traj.steps} retries={traj.retries} energy drift={traj.drift['energy']:.3e} "
          f"momentum drift={traj.drift['momentum']:.3e}")
    return EXIT_OK


def exp_search(traj, s, n, m0, threshold=4.0, iters=50):
    """Largest a in (0, 1] with E^n_s(t, a min{1,t}) <= threshold m0 at every record.

    Returns (a, tightest threshold ratio at a, per-time partial sums at a,
    largest last-term share).
    """
    times = traj.times

    def sums(a):
        vals, share = [], 0.0
        for r, t in enumerate(times):
            z = a * min(1.0, t)
            m = traj.moment_vector(r)
            tot = exp_partial_sums_from(m, s, z, n)
            if z > 0:
                last = m(s * n) * np.exp(n * np.log(z) - gammaln(n + 1))
                share = max(share, last / tot)
            vals.append(tot)
        return np.array(vals), share

    def ok(a):
        return bool(np.all(sums(a)[0] <= threshold * m0))

    if ok(1.0):
        a = 1.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ok(mid) else (lo, mid)
        a = lo
    vals, share = sums(a)
    return a, float(np.max(vals) / m0), vals, share


def envelope_check(rc, tables):
    """Simulate and compare moments with the generation and propagation envelopes."""
    cfg, h = rc.kernel, rc.harness
    q = h.envelope_order
    s, n = _exp_settings(rc)
    orders = sorted(set(rc.sim.output_orders) | {q} | {s * p for p in range(n + 1)})
    sc = replace(rc.sim, output_orders=tuple(orders))
    e0 = init_ensemble(sc)
    b0 = e0.brackets()
    m0, m2 = moment(e0, 0, b0), moment(e0, 2, b0)
    odi = odi_constants(q, m0, m2, cfg, tables)
    env = generation_envelope(q, odi, cfg.gamma2, cfg.gamma3).with_propagation(moment(e0, q, b0))
    traj, _ = run(sc, e0.copy())
    mq = traj.column(q)
    # standard error of the sampled m_q, from the initial ensemble's spread
    sigma = e0.weight * np.sqrt(e0.n) * float(np.std(b0 ** q))
    allowance = h.envelope_sigma * sigma
    t = traj.times
    with np.errstate(divide="ignore"):
        log_env = np.where(t > 0, env.log_combined(np.maximum(t, 1e-300)), np.inf)
        singles = {i: np.where(t > 0, env.log_single(np.maximum(t, 1e-300), i), np.inf)
                   for i in env.gammas}
    log_m = np.log(np.maximum(mq - allowance, 1e-300))
    viol_gen = [float(x) for x, le in zip(t, log_m <= log_env) if not le]
    viol_single = {i: int(np.sum(log_m > v)) for i, v in singles.items()}
    viol_prop = int(np.sum(log_m > env.logMq))
    a, tight, esums, share = exp_search(traj, s, n, m0, h.exp_threshold)
    result = {
        "q": q, "envelope": env.to_dict(), "sigma": sigma, "sup_mq": float(np.max(mq)),
        "violations_generation": viol_gen, "violations_single": viol_single,
        "violations_propagation": viol_prop, "exp_s": s, "exp_n": n, "exp_a": a,
        "exp_threshold": h.exp_threshold, "exp_tightest_ratio": tight,
        "exp_last_term_share": share, "drift": traj.drift,
        "ok": not viol_gen and viol_prop == 0 and not any(viol_single.values()) and a > 0}
    rows = ["t,m_q,sigma,log_env_combined," + ",".join(f"log_env_{i}" for i in singles)
            + ",log_Mq,E_partial"]
    for r in range(len(t)):
        rows.append(",".join(repr(float(x)) for x in
                             [t[r], mq[r], sigma, log_env[r], *[v[r] for v in singles.values()],
                              env.logMq, esums[r]]))
    return result, "\n".join(rows) + "\n", traj


def cmd_envelope_check(rc, args):
    t = time.time()
    tables = _tables(rc, args)
    result, csv_text, traj = envelope_check(rc, tables)
    out = Path(args.out)
    p1 = _write(out, "envelope.csv", csv_text)
    s, n = _exp_settings(rc)
    p2 = _write(out, "trajectory.csv", traj.to_csv(exp=(s, result["exp_a"], n)))
    p3 = _write(out, "envelope.json", json.dumps(result, indent=2, sort_keys=True, default=float))
    _write(out, "manifest.json", _manifest(rc, args, [p1, p2, p3], tables, started=t))
    print(f"{'PASS' if result['ok'] else 'FAIL'} envelope q={result['q']:g}: "
          f"sup m_q = {result['sup_mq']:.6g}, log M_q = {result['envelope']['logMq']:.6g}, "
          f"exponential a = {result['exp_a']:.4g} "
          f"(max E/m0 = {result['exp_tightest_ratio']:.4g})")
    return EXIT_OK if result["ok"] else EXIT_FAIL


COMMANDS = {"constants": cmd_constants, "verify": cmd_verify, "simulate": cmd_simulate,
            "envelope-check": cmd_envelope_check}


def build_parser():
    ap = argparse.ArgumentParser(prog="triboltz", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", default="out", help="output directory")
        if name == "verify":
            p.add_argument("--suite", choices=SUITES + ("all",), default="all")
        if name in ("constants", "verify", "envelope-check"):
            p.add_argument("--override", action="append", metavar="KIND:K=VALUE",
                           help="replace a coercive value or an inequality constant at order K "
                                "(fault injection)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = parse_config(args.config)
        if args.seed is not None:
            rc = with_seed(rc, args.seed)
        return COMMANDS[args.command](rc, args)
    except (FileNotFoundError, ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
