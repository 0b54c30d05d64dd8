"""Acceptance checks, one test group per criterion.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
"""

from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from triboltz.bounds import generation_envelope, odi_constants, wellposed_constants, wellposed_from
from triboltz.cli import envelope_check
from triboltz.config import parse_config, parse_text
from triboltz.dsmc import InitialData, SimConfig, init_ensemble, run
from triboltz.kernels import KernelConfig, cutoff_norm
from triboltz.moments import Ensemble, moment
from triboltz.povzner import (CoerciveTables, decomposition_bounds, modified_decomposition_binary,
                              modified_decompositions_ternary)
from triboltz.suites import (energy_fraction_checks, kinematics_suite, lemma_suite, odi_suite,
                             series_check, stationarity_suite)
from triboltz.weakform import Budget, convolution_ratio, poly_weight, weakform_estimate

CONFIGS = Path(__file__).parent.parent / "configs"
ORDERS = (3.0, 4.0, 6.0)


def report(checks):
    bad = [c for c in checks if not c.ok]
    for c in checks:
        print(f"  {'ok ' if c.ok else 'BAD'} {c.name}: {c.violations}/{c.cases}, worst {c.worst:.3e}")
    assert not bad, bad[0].counterexample


# 1 -------------------------------------------------------------------------

@pytest.mark.criterion(1, "conservation, involution and micro-reversibility at 1e6 collisions")
@pytest.mark.parametrize("d", [2, 3])
def test_c1_conservation_involution(d):
    checks = kinematics_suite(KernelConfig(d=d), n=1_000_000, seed=d)
    assert all(c.cases == 1_000_000 for c in checks if "fractions" not in c.name)
    report(checks)


# 2 -------------------------------------------------------------------------

@pytest.mark.criterion(2, "energy fractions sum to one and match post-collision energies")
@pytest.mark.parametrize("d", [2, 3])
def test_c2_energy_fractions(d):
    checks = energy_fraction_checks(np.random.default_rng(20 + d), d, 10_000)
    assert all(c.cases == 10_000 for c in checks)
    report(checks)


# 3 -------------------------------------------------------------------------

@pytest.mark.criterion(3, "cutoff norms, first coercive values, decreasing tables")
@pytest.mark.parametrize("d,arity,exact", [(2, "binary", 2 * np.pi), (3, "binary", 4 * np.pi),
                                           (2, "ternary", 2 * np.pi**2)])
def test_c3_constant_kernel_norms(d, arity, exact):
    assert abs(cutoff_norm(KernelConfig(d=d), arity).value - exact) <= 1e-8


@pytest.mark.criterion(3, "cutoff norms, first coercive values, decreasing tables")
def test_c3_coercive_tables(full_tables, tables):
    alpha, lam = full_tables
    assert alpha.orders[0] == 2.0 and lam.orders[0] == 2.0
    assert alpha.values[0] == pytest.approx(tables.norm2, rel=1e-4)
    assert lam.values[0] == pytest.approx(tables.norm3, rel=1e-4)
    assert alpha.is_strictly_decreasing() and lam.is_strictly_decreasing()
    assert lam.values[-1] < lam.values[0] / 2
    print(f"  alpha_1 = {alpha.values[0]:.8f}, lambda_1 = {lam.values[0]:.8f}, "
          f"lambda_10 = {lam.values[-1]:.6f}")


# 4 -------------------------------------------------------------------------

@pytest.mark.criterion(4, "elementary inequality suite, 1e4 cases each")
@pytest.mark.parametrize("d", [2, 3])
def test_c4_lemma_suite(d):
    checks = lemma_suite(KernelConfig(d=d, gamma2=0.7, gamma3=1.6), n=10_000, seed=d)
    assert all(c.cases >= 1000 for c in checks)
    assert all(c.cases >= 10_000 for c in checks if c.name != "partial-sum inequalities")
    report(checks)


# 5 -------------------------------------------------------------------------

N5 = 100_000


def _configurations(rng, n, d, k):
    return [3 * rng.standard_normal((n, d)) * rng.exponential(1.0, (n, 1)) for _ in range(k)]


@pytest.mark.criterion(5, "modified decompositions at 1e5 configurations")
def test_c5_binary_decomposition(default_cfg, tables):
    rng = np.random.default_rng(5)
    v, v1 = _configurations(rng, N5, 2, 2)
    for k in ORDERS:
        bad = 0
        for s in range(0, N5, 20_000):
            dec = modified_decomposition_binary(v[s:s + 20_000], v1[s:s + 20_000], k, default_cfg,
                                                norm2=tables.norm2)
            gain, loss = decomposition_bounds(dec, k, tables.alpha(k), tables.norm2)
            bad += int(np.sum(dec.gain > gain * (1 + 1e-10)) + np.sum(dec.loss < loss * (1 - 1e-10)))
        print(f"  binary k={k:g}: {bad} violations in {N5}")
        assert bad == 0


@pytest.mark.criterion(5, "modified decompositions at 1e5 configurations")
def test_c5_ternary_decomposition(default_cfg, tables):
    rng = np.random.default_rng(6)
    v, v1, v2 = _configurations(rng, N5, 2, 3)
    decs = modified_decompositions_ternary(v, v1, v2, ORDERS, default_cfg, norm3=tables.norm3)
    for k, dec in zip(ORDERS, decs):
        gain, loss = decomposition_bounds(dec, k, tables.lam(k), tables.norm3)
        bad = int(np.sum(dec.gain > gain * (1 + 1e-10)) + np.sum(dec.loss < loss * (1 - 1e-10)))
        print(f"  ternary k={k:g}: {bad} violations in {N5}")
        assert len(dec.gain) == N5 and bad == 0


# 6 -------------------------------------------------------------------------

@pytest.mark.criterion(6, "moment inequality against both right sides, N = 1e5")
def test_c6_odi(default_cfg, tables):
    checks = odi_suite(default_cfg, tables, n=100_000)
    names = {c.name for c in checks}
    for ens in ("gaussian", "bimodal"):
        for q in ORDERS:
            assert {f"odi {ens} q={q:g} shifted", f"odi {ens} q={q:g} power"} <= names
        # s p = 4 and s p = 6 series forms
        assert f"odi {ens} q=4 series" in names and f"odi {ens} q=6 series" in names
    report(checks)


# 7 -------------------------------------------------------------------------

@pytest.mark.criterion(7, "Maxwellian stationarity: weak form and DSMC")
def test_c7_weak_form_stationarity(default_cfg):
    checks = stationarity_suite(default_cfg, n=1_000_000)
    report(checks)


@pytest.mark.criterion(7, "Maxwellian stationarity: weak form and DSMC")
def test_c7_dsmc_stationarity(default_cfg):
    sc = SimConfig(kernel=default_cfg, n=100_000, dt=0.05, t_end=5.0, seed=7,
                   initial=InitialData("maxwellian"), output_every=2)
    traj, _ = run(sc)
    m4 = traj.column(4.0)
    dev = np.max(np.abs(m4 / m4[0] - 1.0))
    print(f"  m4(0) = {m4[0]:.5f} (exact 13), max relative deviation {dev:.4f} "
          f"over {len(m4)} records")
    assert traj.times[-1] == pytest.approx(5.0)
    assert dev <= 0.02


# 8 -------------------------------------------------------------------------

@pytest.mark.criterion(8, "finite-difference dm4/dt matches the weak form at checkpoints")
def test_c8_generator_consistency():
    rc = parse_config(CONFIGS / "bimodal.conf")
    n, h = 100_000, 0.05
    checkpoints = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    snaps = tuple(sorted({round(t + s, 12) for t in checkpoints for s in (-h, 0.0, h)}))
    sc = replace(rc.sim, n=n, dt=0.002, t_end=checkpoints[-1] + h, snapshot_times=snaps,
                 output_every=10**9)
    traj, _ = run(sc)
    tt, inc = traj.trace_times, np.diff(traj.trace)
    zs, signal = [], []
    for tc in checkpoints:
        a = int(np.argmin(np.abs(tt - (tc - h))))
        b = int(np.argmin(np.abs(tt - (tc + h))))
        assert tt[a] == pytest.approx(tc - h) and tt[b] == pytest.approx(tc + h)
        d = inc[a:b]
        fd = d.sum() / (2 * h)
        # increments are treated as independent across steps
        var = len(d) * np.var(d, ddof=1) / (2 * h) ** 2
        t_snap, V = traj.snapshots[min(traj.snapshots, key=lambda s: abs(s - tc))]
        assert t_snap == pytest.approx(tc)
        est = weakform_estimate(Ensemble(V, 1.0 / n), poly_weight(4.0), rc.kernel,
                                Budget(n_pairs=256_000, n_triples=256_000), seed=int(tc * 100))
        sigma = np.sqrt(var + est.stderr**2)
        zs.append((fd - est.value) / sigma)
        signal.append(abs(est.value) / est.stderr)
        print(f"  t={tc:.1f}: fd {fd:.3f} +- {np.sqrt(var):.3f}, weak form {est.value:.3f} "
              f"+- {est.stderr:.3f}, z = {zs[-1]:.2f}")
    assert sum(abs(z) <= 3 for z in zs) >= 5
    assert all(abs(z) <= 3 for z in zs)
    # the early checkpoint carries a clearly nonzero rate, so the match is not vacuous
    assert signal[0] > 10


# 9 -------------------------------------------------------------------------

@pytest.mark.criterion(9, "generation and propagation envelopes for compact data")
def test_c9_envelopes_hold():
    rc = parse_config(CONFIGS / "compact_ball.conf")
    res, _, traj = envelope_check(rc, CoerciveTables(rc.kernel))
    print(f"  sup m4 = {res['sup_mq']:.5f}, log K4 = {res['envelope']['logKq']:.5e}, "
          f"log M4 = {res['envelope']['logMq']:.5e}")
    assert not res["violations_generation"]
    assert not any(res["violations_single"].values())
    assert res["violations_propagation"] == 0
    assert len(traj.times) > 10 and traj.times[0] == 0.0


def _split_envelope(tables_for, g2, g3):
    rc = parse_text(f"gamma2 = {g2}\ngamma3 = {g3}\ninitial = compact_ball\nradius = 4\n"
                    "n = 20000\nseed = 3\n")
    e = init_ensemble(rc.sim)
    b = e.brackets()
    odi = odi_constants(4.0, moment(e, 0, b), moment(e, 2, b), rc.kernel,
                        tables_for(rc.kernel))
    return generation_envelope(4.0, odi, g2, g3)


SMALL_T = np.geomspace(1e-4, 0.5, 12)


@pytest.mark.criterion(9, "generation and propagation envelopes for compact data")
@pytest.mark.parametrize("g2,g3", [(1.0, 0.5), (0.5, 1.0)])
def test_c9_combined_beats_small_gamma_envelope(g2, g3):
    env = _split_envelope(CoerciveTables, g2, g3)
    small = 2 if g2 < g3 else 3
    assert np.all(env.log_combined(SMALL_T) < env.log_single(SMALL_T, small))


@pytest.mark.criterion(9, "generation and propagation envelopes for compact data")
@pytest.mark.xfail(strict=True, reason="K_q = max_i K_{q,i} makes the combined envelope "
                   "no tighter than the larger-gamma single envelope; see the decision ledger")
@pytest.mark.parametrize("g2,g3", [(1.0, 0.5), (0.5, 1.0)])
def test_c9_combined_tighter_than_either_single(g2, g3):
    env = _split_envelope(CoerciveTables, g2, g3)
    for i in env.gammas:
        gap = env.log_single(SMALL_T, i) - env.log_combined(SMALL_T)
        print(f"  single {i} minus combined (log): {gap.min():.4f} .. {gap.max():.4f}")
        assert np.all(gap > 0)


# 10 ------------------------------------------------------------------------

@pytest.mark.criterion(10, "exponential generation: a > 0 along the whole run")
@pytest.mark.parametrize("name", ["compact_ball", "mixed"])
def test_c10_exponential_generation(name):
    rc = parse_config(CONFIGS / f"{name}.conf")
    assert rc.harness.exp_n == 8 and rc.harness.exp_threshold == 4.0
    res, _, _ = envelope_check(rc, CoerciveTables(rc.kernel))
    print(f"  {name}: a = {res['exp_a']:.4f}, s = {res['exp_s']:g}, "
          f"max E/m0 = {res['exp_tightest_ratio']:.4f}")
    assert res["exp_s"] == rc.kernel.gamma
    assert res["exp_a"] > 0 and res["exp_tightest_ratio"] <= 4.0 * (1 + 1e-12)


# 11 ------------------------------------------------------------------------

@pytest.mark.criterion(11, "partial-sum inequalities on 1e3 random sequences")
def test_c11_partial_sums():
    check = series_check(np.random.default_rng(11), 1000, n_max=12)
    assert check.cases == 1000
    report([check])


# 12 ------------------------------------------------------------------------

@pytest.mark.criterion(12, "Gaussian convolution lower bound is positive")
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("d", [2, 3])
def test_c12_convolution_lower_bound(gamma, d):
    low, arg, ratios = convolution_ratio(gamma, d, v_max=10.0)
    print(f"  gamma={gamma:g}, d={d}: min ratio {low:.6f} at |v| = {arg:.2f}")
    assert low > 0 and np.all(ratios > 0)


# 13 ------------------------------------------------------------------------

@pytest.mark.criterion(13, "well-posedness constants")
def test_c13_substitution_oracle(oracle):
    ref = oracle["constants_q4_default"]
    fr = ref["frozen"]
    frozen = SimpleNamespace(norm2=fr["norm2"], norm3=fr["norm3"],
                             alpha=lambda k: fr["alpha_4"], lam=lambda k: fr["lambda_4"])
    wp = wellposed_constants(1.0, 1.0, KernelConfig(), frozen)
    assert wp.q == ref["order_wellposed"]
    for got, key in ((wp.C, "C"), (wp.Ctilde, "C_tilde"), (wp.xStar, "x_star"),
                     (wp.LStar, "L_star"), (wp.A, "A")):
        assert got == pytest.approx(ref[key], rel=1e-10), key
    # the root is exact up to rounding of terms of size 2 C x*
    assert abs(wp.L(wp.xStar)) <= 1e-10 * 2 * wp.C * wp.xStar


@pytest.mark.criterion(13, "well-posedness constants")
def test_c13_root_and_maximum():
    wp = wellposed_from(4.0, 1.0, 1.0)
    assert wp.xStar == 16.0 and wp.A == pytest.approx(16 * (1 + 8 / 27))
    assert abs(wp.L(0.0)) <= 1e-10 and abs(wp.L(wp.xStar)) <= 1e-10
    for C, Ct in ((1.0, 1.0), (3.7, 0.2), (2969267.134830999, 1.1107207345395915)):
        wp = wellposed_from(4.0, C, Ct)
        xs = np.linspace(0.0, wp.xStar, 200_001)
        assert np.max(wp.L(xs)) == pytest.approx(wp.LStar, rel=1e-6)


@pytest.mark.criterion(13, "well-posedness constants")
def test_c13_default_tables(tables):
    wp = wellposed_constants(1.0, 1.0, KernelConfig(), tables)
    assert wp.A == pytest.approx(wp.xStar + wp.LStar) and wp.A > 0
    assert abs(wp.L(wp.xStar)) <= 1e-10 * 2 * wp.C * wp.xStar
