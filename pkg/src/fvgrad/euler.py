"""Pointwise algebra for the 2D compressible Euler equations.

States are arrays with a trailing component axis: conservative
``w = (rho, rho*u, rho*v, E)`` and primitive ``u = (rho, u, v, p)``.
Every function accepts plain numpy arrays or traced variables, so the same
code serves the fast solver path and the differentiated training path.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

RHO, MX, MY, EN = 0, 1, 2, 3
U, V, P = 1, 2, 3


class AdmissibilityError(ValueError):
    """State outside the admissible set (rho > 0, internal energy > 0)."""

    def __init__(self, component, detail=""):
        super().__init__(f"non-admissible state: {component} {detail}".strip())
        self.component = component


@dataclass(frozen=True)
class GasModel:
    """Polytropic ideal gas; gamma is the ratio of specific heats."""

    gamma: float = 1.4

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")

    @property
    def cv(self):
        # entropy scale in s = cv * log(p / rho^gamma); any positive constant
        # rescales (eta, q) jointly without changing the residual sign
        return 1.0 / (self.gamma - 1.0)


def is_admissible(w):
    """True iff rho > 0 and internal energy E - |m|^2/(2 rho) > 0."""
    w = ad.value_of(w)
    rho = w[..., RHO]
    if np.any(rho <= 0.0):
        return False
    e_int = w[..., EN] - 0.5 * (w[..., MX] ** 2 + w[..., MY] ** 2) / rho
    return bool(np.all(e_int > 0.0))


def _check_prim(u):
    uv = ad.value_of(u)
    if np.any(uv[..., RHO] <= 0.0):
        raise AdmissibilityError("rho", "<= 0")
    if np.any(uv[..., P] <= 0.0):
        raise AdmissibilityError("p", "<= 0")


def _check_cons(w):
    wv = ad.value_of(w)
    rho = wv[..., RHO]
    if np.any(rho <= 0.0):
        raise AdmissibilityError("rho", "<= 0")
    e_int = wv[..., EN] - 0.5 * (wv[..., MX] ** 2 + wv[..., MY] ** 2) / rho
    if np.any(e_int <= 0.0):
        raise AdmissibilityError("internal_energy", "<= 0")


def prim_to_cons(u, gas, check=True):
    """(rho, u, v, p) -> (rho, rho u, rho v, E) with E = p/(gamma-1) + rho|v|^2/2."""
    if check:
        _check_prim(u)
    rho = u[..., RHO]
    vx = u[..., U]
    vy = u[..., V]
    p = u[..., P]
    E = p / (gas.gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy)
    return ad.stack([rho, rho * vx, rho * vy, E], axis=-1)


def cons_to_prim(w, gas, check=True):
    """Inverse of prim_to_cons."""
    if check:
        _check_cons(w)
    rho = w[..., RHO]
    vx = w[..., MX] / rho
    vy = w[..., MY] / rho
    p = (gas.gamma - 1.0) * (w[..., EN] - 0.5 * rho * (vx * vx + vy * vy))
    return ad.stack([rho, vx, vy, p], axis=-1)


def physical_flux(w, n, gas, check=True):
    """Normal physical flux f(w) . n for a unit direction n (..., 2)."""
    if check:
        _check_cons(w)
    n = ad.value_of(n)
    rho = w[..., RHO]
    mx = w[..., MX]
    my = w[..., MY]
    E = w[..., EN]
    vx = mx / rho
    vy = my / rho
    p = (gas.gamma - 1.0) * (E - 0.5 * (mx * vx + my * vy))
    vn = vx * n[..., 0] + vy * n[..., 1]
    return ad.stack([
        rho * vn,
        mx * vn + p * n[..., 0],
        my * vn + p * n[..., 1],
        (E + p) * vn,
    ], axis=-1)


def sound_speed(w, gas):
    rho = w[..., RHO]
    mx = w[..., MX]
    my = w[..., MY]
    p = (gas.gamma - 1.0) * (w[..., EN] - 0.5 * (mx * mx + my * my) / rho)
    return ad.sqrt(gas.gamma * p / rho)


def max_wave_speed(w, n, gas, check=True):
    """|v.n| + c, the largest characteristic speed in direction n."""
    if check:
        _check_cons(w)
    n = ad.value_of(n)
    rho = w[..., RHO]
    vn = (w[..., MX] * n[..., 0] + w[..., MY] * n[..., 1]) / rho
    return ad.absolute(vn) + sound_speed(w, gas)


def entropy_pair(w, gas, check=True):
    """Entropy pair eta = -rho s, q = -rho s v with s = cv log(p / rho^gamma)."""
    if check:
        _check_cons(w)
    rho = w[..., RHO]
    vx = w[..., MX] / rho
    vy = w[..., MY] / rho
    p = (gas.gamma - 1.0) * (w[..., EN] - 0.5 * rho * (vx * vx + vy * vy))
    s = gas.cv * ad.log(p / ad.power(rho, gas.gamma))
    eta = -(rho * s)
    return eta, eta * vx, eta * vy
