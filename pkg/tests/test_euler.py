import numpy as np
import pytest

from fvgrad import euler
from fvgrad import mesh as msh
from fvgrad.euler import AdmissibilityError, GasModel
from conftest import random_admissible_prim


def test_rest_state_energy(gas):
    w = euler.prim_to_cons(np.array([1.0, 0.0, 0.0, 1.0]), gas)
    assert w[3] == pytest.approx(2.5, rel=1e-15)


def test_forward_step_state_energy(gas):
    # E = 1/0.4 + 0.5 * 1.4 * 9 = 8.8
    w = euler.prim_to_cons(np.array([1.4, 3.0, 0.0, 1.0]), gas)
    assert w[3] == pytest.approx(8.8, rel=1e-14)


def test_roundtrip_property(rng, gas):
    u = random_admissible_prim(rng, 10_000, lo=0.05, hi=5.0, vmax=4.0)
    w = euler.prim_to_cons(u, gas)
    back = euler.cons_to_prim(w, gas)
    err = np.abs(back - u) / np.maximum(np.abs(u), 1.0)
    assert err.max() < 1e-14


def test_conversion_rejects_non_admissible(gas):
    with pytest.raises(AdmissibilityError):
        euler.prim_to_cons(np.array([-1.0, 0.0, 0.0, 1.0]), gas)
    with pytest.raises(AdmissibilityError):
        euler.cons_to_prim(np.array([1.0, 1.0, 0.0, 0.5]), gas)


def test_stationary_flux_is_pressure_only(gas):
    w = euler.prim_to_cons(np.array([2.0, 0.0, 0.0, 3.0]), gas)
    n = np.array([0.6, 0.8])
    f = euler.physical_flux(w, n, gas)
    np.testing.assert_allclose(f, [0.0, 3.0 * 0.6, 3.0 * 0.8, 0.0], atol=1e-14)


def test_flux_hand_value(gas):
    w = euler.prim_to_cons(np.array([1.4, 3.0, 0.0, 1.0]), gas)
    f = euler.physical_flux(w, np.array([1.0, 0.0]), gas)
    np.testing.assert_allclose(f, [4.2, 13.6, 0.0, 29.4], rtol=1e-14)


def test_flux_rotation_equivariance(rng, gas):
    for _ in range(20):
        u = random_admissible_prim(rng, 1)[0]
        w = euler.prim_to_cons(u, gas)
        th = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        n = rng.normal(size=2)
        n /= np.hypot(*n)
        u_rot = u.copy()
        u_rot[1:3] = rot @ u[1:3]
        w_rot = euler.prim_to_cons(u_rot, gas)
        f = euler.physical_flux(w, n, gas)
        f_rot = euler.physical_flux(w_rot, rot @ n, gas)
        np.testing.assert_allclose(f_rot[[0, 3]], f[[0, 3]], rtol=1e-12,
                                   atol=1e-12)
        np.testing.assert_allclose(f_rot[1:3], rot @ f[1:3], rtol=1e-12,
                                   atol=1e-12)


def test_wave_speed_values(gas):
    w = euler.prim_to_cons(np.array([1.0, 0.0, 0.0, 1.0]), gas)
    s = euler.max_wave_speed(w, np.array([1.0, 0.0]), gas)
    assert float(s) == pytest.approx(np.sqrt(1.4), rel=1e-14)
    w2 = euler.prim_to_cons(np.array([1.4, 3.0, 0.0, 1.0]), gas)
    s2 = euler.max_wave_speed(w2, np.array([1.0, 0.0]), gas)
    assert float(s2) == pytest.approx(4.0, rel=1e-14)


def test_wave_speed_at_least_sound_speed(rng, gas):
    u = random_admissible_prim(rng, 200)
    w = euler.prim_to_cons(u, gas)
    n = np.array([0.0, 1.0])
    s = euler.max_wave_speed(w, n, gas)
    c = euler.sound_speed(w, gas)
    assert (s >= c).all() and (c > 0).all()


def test_entropy_zero_on_reference_isentrope(gas):
    u = np.array([1.3, 0.4, -0.2, 1.3 ** 1.4])
    w = euler.prim_to_cons(u, gas)
    eta, qx, qy = euler.entropy_pair(w, gas)
    assert abs(float(eta)) < 1e-13
    assert abs(float(qx)) < 1e-13 and abs(float(qy)) < 1e-13


def test_entropy_flux_zero_at_rest(gas):
    w = euler.prim_to_cons(np.array([2.0, 0.0, 0.0, 0.5]), gas)
    _eta, qx, qy = euler.entropy_pair(w, gas)
    assert float(qx) == 0.0 and float(qy) == 0.0


def test_entropy_constant_along_isentropes(rng, gas):
    s_ref = 0.7
    for _ in range(50):
        rho = rng.uniform(0.2, 3.0)
        p = np.exp(s_ref * (gas.gamma - 1.0)) * rho ** gas.gamma
        w = euler.prim_to_cons(np.array([rho, 0.3, -0.1, p]), gas)
        eta, _, _ = euler.entropy_pair(w, gas)
        assert float(eta) / rho == pytest.approx(-s_ref, rel=1e-12)


def test_is_admissible_cases(gas):
    assert euler.is_admissible(np.array([1.0, 0.0, 0.0, 2.5]))
    assert not euler.is_admissible(np.array([-1.0, 0.0, 0.0, 2.5]))
    # internal energy exactly zero sits outside the admissible set
    assert not euler.is_admissible(np.array([2.0, 2.0, 0.0, 1.0]))


def test_gas_model_validation():
    with pytest.raises(ValueError):
        GasModel(gamma=1.0)


def test_entropy_pair_compatibility_smooth_advection(gas):
    """Discrete d_t eta + div q -> 0 at first order for an advected wave."""
    from fvgrad.train import loss_entropy  # noqa: F401 (residual parts below)
    from fvgrad import recon

    def residual_norm(n):
        m = msh.periodic_structured_mesh(n)
        x = m.centroid[:, 0]
        vel, p0 = 0.7, 1.0
        dt = 0.2 / n

        def state(t):
            rho = 1.0 + 0.3 * np.sin(2 * np.pi * (x - vel * t))
            return euler.prim_to_cons(
                np.column_stack([rho, np.full_like(x, vel), np.zeros_like(x),
                                 np.full_like(x, p0)]), gas)

        eta0, qx0, qy0 = euler.entropy_pair(state(0.0), gas)
        eta1, qx1, qy1 = euler.entropy_pair(state(dt), gas)
        from fvgrad.train import _divergence_gg
        div0 = _divergence_gg(m, qx0, qy0)
        div1 = _divergence_gg(m, qx1, qy1)
        r = (eta1 - eta0) / dt + 0.5 * (div0 + div1)
        return float(np.sqrt(np.mean(r ** 2)))

    levels = [8, 16, 32]
    errs = [residual_norm(n) for n in levels]
    h = [1.0 / n for n in levels]
    slope = np.polyfit(np.log(h), np.log(errs), 1)[0]
    assert slope >= 0.8
