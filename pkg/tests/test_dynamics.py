import numpy as np
import pytest

from fracollapse.dynamics import (
    BlowupSignal,
    SimConfig,
    StopReason,
    gaussian,
    random_bumps,
    read_diagnostics_csv,
    ring,
    run,
    scaled_ground_state,
    step_strang,
    write_diagnostics_csv,
)
from fracollapse.errors import ConfigError
from fracollapse.spectral import Field, Grid, ModelParams, l2_norm

LINEAR = ModelParams(0.6, 1, 0.5, 1.0, 0.0, 0.0)
SMOOTH = ModelParams(0.8, 1, 0.5, 1.0, 1.0, 1.0)


def test_plane_wave_linear_flow_exact():
    g = Grid(2, 64, 4.0)
    k = np.array([3, -5]) * np.pi / 4.0
    prm = ModelParams(0.7, 2, 0.5, 0.7, 0.0, 0.0)
    f = Field.from_function(g, lambda x, y: np.exp(1j * (k[0] * x + k[1] * y)))
    dt = 0.37
    out = step_strang(f, dt, prm)
    exact = f.values * np.exp(-1j * np.linalg.norm(k) ** 1.4 * dt)
    assert np.max(np.abs(out.values - exact)) <= 1e-12


def test_zero_step_is_identity():
    f = random_bumps(Grid(1, 64, 5.0), 0)
    assert step_strang(f, 0.0, SMOOTH) is f


def test_nonlinear_substep_preserves_modulus():
    g = Grid(1, 128, 10.0)
    f = random_bumps(g, 1)
    prm = ModelParams(1.0, 1, 0.5, 1.0, 1.0, 1.0)
    out = step_strang(f, 0.01, prm)
    assert l2_norm(out) == pytest.approx(l2_norm(f), rel=1e-14)


def test_standing_wave(gs_frac):
    prm = ModelParams(0.7, 2, 0.1, 0.7, 0.0, 1.0)
    tr = run(gs_frac.profile, prm, SimConfig(dt=1e-3, t_end=1.0, diag_every=1000))
    err = l2_norm(tr.final_field - np.exp(1j * tr.t_stop) * gs_frac.profile) / gs_frac.mass
    assert tr.stop_reason is StopReason.REACHED_T_END
    assert tr.t_stop == pytest.approx(1.0, abs=1e-12)
    assert err <= 1e-4


def test_linear_flow_conserves_mass_and_energy():
    g = Grid(1, 256, 20.0)
    tr = run(gaussian(g, 1.0, 1.0), LINEAR, SimConfig(dt=1e-3, t_end=1.0, diag_every=50))
    m, e = tr.column("mass"), tr.column("energy")
    assert np.max(np.abs(m - m[0])) / m[0] <= 1e-12
    assert np.max(np.abs(e - e[0])) / abs(e[0]) <= 1e-12


def test_mass_conserved_over_many_steps():
    g = Grid(1, 256, 30.0)
    tr = run(gaussian(g, 1.0, 2.0), SMOOTH, SimConfig(dt=1e-3, t_end=10.0, diag_every=500))
    assert tr.steps == 10000
    m = tr.column("mass")
    assert np.max(np.abs(m - m[0])) / m[0] <= 1e-12


def test_energy_drift_second_order():
    g = Grid(1, 256, 30.0)
    u0 = gaussian(g, 1.0, 2.0)
    drift = []
    for dt in (1e-3, 5e-4):
        e = run(u0, SMOOTH, SimConfig(dt=dt, t_end=1.0, diag_every=50)).column("energy")
        drift.append(np.max(np.abs(e - e[0])) / abs(e[0]))
    assert drift[0] <= 1e-6
    assert 3.0 <= drift[0] / drift[1] <= 5.0


def test_linear_flow_time_reversible():
    g = Grid(2, 32, 4.0)
    f = random_bumps(g, 7)
    prm = ModelParams(0.7, 2, 0.5, 0.7, 0.0, 0.0)
    back = step_strang(step_strang(f, 0.05, prm), -0.05, prm)
    assert np.max(np.abs(back.values - f.values)) <= 1e-12


def test_phase_equivariance():
    g = Grid(1, 128, 10.0)
    f = random_bumps(g, 4)
    rot = np.exp(0.9j)
    a = run(f, SMOOTH, SimConfig(dt=1e-2, t_end=0.5)).final_field
    b = run(f * rot, SMOOTH, SimConfig(dt=1e-2, t_end=0.5)).final_field
    assert np.max(np.abs(b.values - rot * a.values)) <= 1e-12


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_overflow_raises_blowup_signal():
    g = Grid(1, 16, 1.0)
    f = Field(g, np.full(16, 1e200))
    with pytest.raises(BlowupSignal):
        step_strang(f, 1e-3, SMOOTH)
    tr = run(f, SMOOTH, SimConfig(dt=1e-3, t_end=1.0))
    assert tr.stop_reason is StopReason.GRADIENT_BLOWUP
    assert tr.notes


def test_mass_drift_abort():
    g = Grid(1, 128, 10.0)
    tr = run(random_bumps(g, 2), SMOOTH, SimConfig(dt=1e-2, t_end=5.0, stop_mass_drift=1e-300))
    assert tr.stop_reason is StopReason.MASS_DRIFT
    assert tr.t_stop < 5.0


def test_gradient_stop_with_adaptive_step():
    # strongly focusing 2D data with negative energy
    g = Grid(2, 128, 8.0)
    prm = ModelParams(0.7, 2, 0.5, 0.9, -1.0, 1.0)
    tr = run(gaussian(g, 4.0, 1.0), prm, SimConfig(dt=1e-3, t_end=2.0, stop_gradient_factor=3.0, adapt=True))
    assert tr.stop_reason is StopReason.GRADIENT_BLOWUP
    dts = [r.dt for r in tr.diagnostics]
    assert min(dts) < 1e-3


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=-1.0), dict(t_end=0.0), dict(stop_gradient_factor=1.0),
                                dict(diag_every=0), dict(adapt_growth=1.0)])
def test_config_validation(kw):
    base = dict(dt=0.1, t_end=1.0)
    base.update(kw)
    with pytest.raises(ConfigError):
        SimConfig(**base)


def test_diagnostics_schedule_and_csv(tmp_path):
    g = Grid(1, 64, 8.0)
    tr = run(gaussian(g), SMOOTH, SimConfig(dt=0.03, t_end=1.0, diag_every=4, snapshot_every=10))
    t = tr.column("t")
    assert np.all(np.diff(t) > 0)
    assert t[-1] == pytest.approx(1.0, abs=1e-12)
    assert [s[0] for s in tr.snapshots][0] == 0.0 and tr.snapshots[-1][0] == tr.t_stop
    path = write_diagnostics_csv(tmp_path / "d.csv", tr.diagnostics)
    assert path.read_text().splitlines()[0] == "t,mass,energy,hs,lp1,lp2,virial,conc_mass"
    back = read_diagnostics_csv(path)
    assert [r.hs for r in back] == [r.hs for r in tr.diagnostics]
    assert back[0].virial is None


def test_random_bumps_deterministic():
    g = Grid(2, 32, 4.0)
    assert np.array_equal(random_bumps(g, 11).values, random_bumps(g, 11).values)
    assert not np.array_equal(random_bumps(g, 11).values, random_bumps(g, 12).values)


def test_ring_and_gaussian_are_radial():
    g = Grid(2, 64, 6.0)
    for f in (ring(g), gaussian(g, 1.0, 1.3)):
        v = f.values.real
        assert np.allclose(v, v.T) and np.allclose(v[1:, :], v[1:, :][::-1, :])


def test_scaled_ground_state_grid(gs_frac):
    f = scaled_ground_state(gs_frac, 1.0, 2.0)
    assert f.grid.half_length == gs_frac.grid.half_length / 2
    assert l2_norm(f) == pytest.approx(gs_frac.mass, rel=1e-14)
