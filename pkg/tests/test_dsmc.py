import csv
import io

import numpy as np
import pytest

from triboltz.dsmc import (InitialData, SimConfig, Simulator, init_ensemble, run,
                           truncate_ensemble)
from triboltz.errors import InvalidInputError
from triboltz.kernels import KernelConfig, Profile
from triboltz.moments import Ensemble


def sim(**kw):
    base = dict(n=2000, dt=0.02, t_end=0.4, seed=3)
    base.update(kw)
    return SimConfig(**base)


@pytest.mark.parametrize("init", [
    InitialData("maxwellian", temperature=2.0),
    InitialData("gaussian_mixture", components=((0.5, (2.0, 0.0), 0.25),
                                                (0.5, (-2.0, 0.0), 0.25))),
    InitialData("compact_ball", radius=3.0),
    InitialData("point", mean=(1.0, -1.0)),
])
def test_initial_laws(init):
    e = init_ensemble(sim(n=20000, initial=init))
    assert e.n == 20000 and e.mass == pytest.approx(1.0)
    if init.law == "maxwellian":
        assert np.var(e.velocities) == pytest.approx(2.0, rel=0.05)
    if init.law == "compact_ball":
        assert e.brackets().max() <= 3.0
    if init.law == "point":
        assert np.all(e.velocities == [1.0, -1.0])
    if init.law == "gaussian_mixture":
        assert abs(np.mean(e.velocities[:, 0])) < 0.1
        assert np.mean(np.abs(e.velocities[:, 0])) == pytest.approx(2.0, rel=0.05)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        SimConfig(n=2)
    with pytest.raises(InvalidInputError):
        SimConfig(binary=False, ternary=False)
    with pytest.raises(InvalidInputError):
        SimConfig(dt=0.0)
    with pytest.raises(InvalidInputError):
        SimConfig(truncation_r=0.5)
    with pytest.raises(InvalidInputError):
        InitialData("cauchy")
    with pytest.raises(InvalidInputError):
        init_ensemble(sim(initial=InitialData("gaussian_mixture")))
    SimConfig(n=2, ternary=False)


def test_point_mass_is_stationary():
    traj, e = run(sim(initial=InitialData("point", mean=(0.5, 0.5))))
    assert np.all(e.velocities == 0.5)
    assert traj.events_binary[-1] == 0 and traj.events_ternary[-1] == 0


@pytest.mark.parametrize("kernel", [KernelConfig(), KernelConfig(gamma2=0.0, gamma3=2.0),
                                    KernelConfig(d=3, theta3=1.0,
                                                 phi=Profile((1.0, 0.5), 0.5))])
def test_conservation(kernel):
    traj, e = run(sim(kernel=kernel, initial=InitialData("compact_ball", radius=3.0)))
    assert traj.drift["energy"] <= 1e-8 and traj.drift["momentum"] <= 1e-8
    assert traj.events_binary[-1] > 0 and traj.events_ternary[-1] > 0
    np.testing.assert_allclose(traj.column(0.0), 1.0)


def test_trajectory_is_deterministic():
    sc = sim(initial=InitialData("compact_ball", radius=3.0))
    a, ea = run(sc)
    b, eb = run(sc)
    assert a.to_csv() == b.to_csv()
    np.testing.assert_array_equal(ea.velocities, eb.velocities)
    c, _ = run(sim(seed=4, initial=InitialData("compact_ball", radius=3.0)))
    assert c.to_csv() != a.to_csv()


def test_collision_type_switches():
    only2, _ = run(sim(ternary=False))
    only3, _ = run(sim(binary=False))
    assert only2.events_ternary[-1] == 0 and only2.events_binary[-1] > 0
    assert only3.events_binary[-1] == 0 and only3.events_ternary[-1] > 0


def test_truncated_kernel_freezes_outer_particles():
    R = 2.5
    e0 = truncate_ensemble(init_ensemble(sim()), R)
    assert e0.brackets().max() <= R and e0.mass < 1.0
    traj, e = run(sim(truncation_r=R), ensemble=e0)
    # the cutoff acts on incoming velocities; outgoing ones obey the energy bound
    assert e.brackets().max() <= np.sqrt(3) * R
    assert traj.drift["energy"] <= 1e-8
    # particles outside the ball never collide
    full = init_ensemble(sim())
    outside = full.brackets() > R
    _, after = run(sim(truncation_r=R), ensemble=Ensemble(full.velocities.copy(), full.weight))
    np.testing.assert_array_equal(after.velocities[outside], full.velocities[outside])
    with pytest.raises(InvalidInputError):
        truncate_ensemble(e0, 0.5)


def test_step_stats():
    s = Simulator(sim(initial=InitialData("compact_ball", radius=3.0)))
    for _ in range(5):
        st = s.step()
        assert st.binary_accepted <= st.binary_candidates
        assert st.ternary_accepted <= st.ternary_candidates
        assert 0 <= st.efficiency_binary <= 1 and 0 <= st.efficiency_ternary <= 1
        assert 0 < st.dt <= 0.02 and st.retries == 0


def test_step_halving_bounds_candidates():
    s = Simulator(sim(n=500, dt=10.0, max_candidates=0.05))
    st = s.step()
    assert st.dt < 10.0
    assert s.t == pytest.approx(st.dt)


def test_csv_and_snapshots():
    sc = sim(output_every=5, snapshot_times=(0.1, 0.3), output_orders=(2.0, 4.0, 6.0))
    traj, _ = run(sc)
    rows = list(csv.reader(io.StringIO(traj.to_csv(exp=(2.0, 0.5, 3)))))
    assert rows[0] == ["t", "m0", "px", "py", "m2", "m_0", "m_2", "m_4", "m_6", "E_partial",
                       "events_binary", "events_ternary"]
    assert float(rows[-1][0]) == pytest.approx(0.4)
    assert len(rows) - 1 == len(traj.times)
    assert sorted(traj.snapshots) == [0.1, 0.3]
    for t, (tt, V) in traj.snapshots.items():
        assert tt == pytest.approx(t) and V.shape == (2000, 2)
    # the trace of m_4 is the recorded moment at the end of the run
    assert traj.trace[-1] == pytest.approx(traj.column(4.0)[-1], rel=1e-9)


def test_moment_vector_round_trip():
    traj, _ = run(sim(t_end=0.0))
    m = traj.moment_vector(0)
    e = init_ensemble(sim())
    assert m(4.0) == pytest.approx(e.weight * np.sum(e.brackets() ** 4))
    assert traj.steps == 0


def test_custom_ensemble_weight_respected():
    e = Ensemble(np.random.default_rng(0).standard_normal((300, 2)), 0.01)
    traj, out = run(sim(n=300), ensemble=e)
    assert out.mass == pytest.approx(3.0)
    np.testing.assert_allclose(traj.column(0.0), 3.0)
