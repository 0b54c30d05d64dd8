import json
from dataclasses import asdict

import numpy as np
import pytest

from triboltz.bounds import collision_frequency_majorant
from triboltz.kernels import KernelConfig, Profile
from triboltz.moments import Ensemble, moment
from triboltz.suites import bimodal_ensemble, gaussian_ensemble, odi_suite
from triboltz.weakform import (Budget, collision_frequencies, convolution_ratio,
                               energy_weight, gaussian_convolution, mass_weight,
                               momentum_weight, odi_verify, poly_weight, weakform_estimate)

SMALL = Budget(n_pairs=8000, n_triples=8000)


@pytest.mark.parametrize("make", [gaussian_ensemble, bimodal_ensemble])
@pytest.mark.parametrize("phi", [mass_weight(), energy_weight(), momentum_weight(0),
                                 momentum_weight(1)], ids=lambda f: f.name)
def test_collision_invariants_vanish(make, phi, default_cfg):
    e = make(5000, 2, 3)
    est = weakform_estimate(e, phi, default_cfg, SMALL, seed=5)
    assert abs(est.value) <= 3 * est.stderr + 1e-10
    assert est.breakdown["binary"] + est.breakdown["ternary"] == pytest.approx(est.value,
                                                                                abs=1e-12)


def test_estimate_is_reproducible_and_records_seed(default_cfg):
    e = bimodal_ensemble(2000, 2, 0)
    a = weakform_estimate(e, poly_weight(4), default_cfg, SMALL, seed=11)
    b = weakform_estimate(e, poly_weight(4), default_cfg, SMALL, seed=11)
    assert asdict(a) == asdict(b) and a.seed == 11
    c = weakform_estimate(e, poly_weight(4), default_cfg, SMALL, seed=12)
    assert c.value != a.value


def test_stderr_shrinks_with_budget(default_cfg):
    e = bimodal_ensemble(20000, 2, 1)
    small = weakform_estimate(e, poly_weight(4), default_cfg, Budget(16000, 16000), seed=2)
    big = weakform_estimate(e, poly_weight(4), default_cfg, Budget(32000, 32000), seed=3)
    assert big.stderr / small.stderr == pytest.approx(2 ** -0.5, rel=0.2)


def test_low_confidence_flag(default_cfg):
    e = bimodal_ensemble(1000, 2, 1)
    est = weakform_estimate(e, poly_weight(4), default_cfg,
                            Budget(640, 640, target_stderr=1e-9), seed=0)
    assert est.low_confidence


def test_binary_and_ternary_switches(default_cfg):
    e = bimodal_ensemble(2000, 2, 4)
    only2 = weakform_estimate(e, poly_weight(4), default_cfg, SMALL, 1, ternary=False)
    only3 = weakform_estimate(e, poly_weight(4), default_cfg, SMALL, 1, binary=False)
    assert only2.breakdown["ternary"] == 0 and only3.breakdown["binary"] == 0
    assert only2.value == only2.breakdown["binary"] and only3.value == only3.breakdown["ternary"]
    assert only2.sample_triples == 0 and only3.sample_pairs == 0


def test_two_particle_binary_weak_form_exact():
    # two particles, constant kernel in d = 2, phi = |v|^4: exact angular average
    cfg = KernelConfig(gamma2=1.0, gamma3=1.0)
    v = np.array([[1.0, 0.0], [-1.0, 0.0]])
    e = Ensemble(v, 0.5)
    est = weakform_estimate(e, poly_weight(4), cfg, Budget(n_pairs=320, n_triples=0,
                                                            n_circle=64), seed=0)
    # post velocities are (cos 2a, sin 2a) rotations: |v'| = |v|, so the change is zero
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_collision_frequencies_trivial_cases():
    cfg = KernelConfig(gamma2=0.0, gamma3=1.0)
    rng = np.random.default_rng(0)
    e = Ensemble.from_mass(rng.standard_normal((50, 2)), 2.0)
    nu2, _ = collision_frequencies(e, rng.standard_normal((3, 2)), cfg, 2 * np.pi, 2 * np.pi**2)
    np.testing.assert_allclose(nu2, 2 * np.pi * 2.0)
    one = Ensemble(np.array([[0.3, 0.4]]), 1.0)
    nu2, nu3 = collision_frequencies(one, one.velocities, KernelConfig(), 1.0, 1.0)
    assert nu2[0] == 0.0 and nu3[0] == 0.0


def test_collision_frequencies_below_majorant(tables):
    cfg = KernelConfig(theta3=1.0, phi=Profile((1.0,), 0.5))
    e = gaussian_ensemble(300, 2, 9)
    b = e.brackets()
    m0, m2 = moment(e, 0, b), moment(e, 2, b)
    probes = np.random.default_rng(2).standard_normal((1000, 2)) * 4
    nu2, nu3 = collision_frequencies(e, probes, cfg, tables.norm2, tables.norm3)
    maj = collision_frequency_majorant(probes, m0, m2, cfg, tables.norm2, tables.norm3)
    assert np.all(nu2 + 3 * nu3 <= maj)
    assert np.all(nu2 <= maj)


def test_odi_verify_report_is_json(tables, default_cfg):
    e = gaussian_ensemble(5000, 2, 0)
    rep = odi_verify(e, 4.0, default_cfg, tables, SMALL, seed=3, s=1.0, p=4)
    assert set(rep.rhs) == {"shifted", "power", "series"}
    assert rep.ok
    json.dumps(asdict(rep))


def test_odi_scaled_ensemble(tables, default_cfg):
    e = bimodal_ensemble(5000, 2, 0)
    scaled = Ensemble(2 * e.velocities, e.weight)
    for ens in (e, scaled):
        for q in (3.0, 4.0):
            assert odi_verify(ens, q, default_cfg, tables, SMALL, seed=1).ok


def test_odi_negative_control(tables, default_cfg):
    from triboltz.povzner import CoerciveTables

    broken = CoerciveTables(default_cfg)
    broken._memo.update(tables._memo)
    broken.overrides[("C", 4.0)] = 1e-6
    checks = [c for c in odi_suite(default_cfg, broken, n=5000, budget=SMALL)
              if "q=4" in c.name]
    assert any(not c.ok for c in checks)
    bad = next(c for c in checks if not c.ok)
    assert bad.counterexample["q"] == 4.0 and bad.counterexample["rhs"] < 0


def test_gaussian_convolution_closed_forms():
    # gamma = 2: E|v - X|^2 = |v|^2 + d T
    assert gaussian_convolution(1.5, 2.0, 3) == pytest.approx(1.5**2 + 3, rel=1e-9)
    assert gaussian_convolution(0.0, 2.0, 2, temperature=2.0) == pytest.approx(4.0, rel=1e-9)
    # gamma = 1, v = 0, d = 2: E|X| = sqrt(pi / 2)
    assert gaussian_convolution(0.0, 1.0, 2) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-9)


def test_convolution_ratio_positive():
    low, arg, ratios = convolution_ratio(1.0, 2, n=41)
    assert low > 0 and 0 <= arg <= 10 and low == pytest.approx(ratios.min())
