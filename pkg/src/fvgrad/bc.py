"""Ghost-state construction for the boundary condition families.

Each non-periodic boundary face owns one ghost slot; the ghost state is a
primitive-variable function of the interior state and the outward normal.
Periodic faces never reach this layer (the mesh merges them into interior
faces).  Ghost states that come out non-admissible are clamped to a small
positive floor and counted.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import mesh as msh
from .euler import GasModel, P, RHO, U, V

CLAMP_FLOOR = 1e-10


@dataclass
class BCSpec:
    """Parameters for one boundary tag.

    kind: tag code from the mesh module.
    state: freestream primitive state for inflow conditions, shape (4,) or
        per-face (G, 4).
    back_pressure: prescribed static pressure for subsonic outflow, scalar
        or per-face.
    """

    kind: int
    state: np.ndarray = None
    back_pressure: float = None

    def __post_init__(self):
        if self.kind in (msh.SUPERSONIC_IN, msh.SUBSONIC_IN):
            if self.state is None:
                raise ValueError("inflow condition requires a freestream state")
            s = np.asarray(self.state, dtype=np.float64)
            if np.any(s[..., RHO] <= 0) or np.any(s[..., P] <= 0):
                raise ValueError("freestream state is not admissible")
            self.state = s
        if self.kind == msh.SUBSONIC_OUT:
            if self.back_pressure is None:
                raise ValueError("subsonic outflow requires a back pressure")
            if np.any(np.asarray(self.back_pressure) <= 0):
                raise ValueError("back pressure must be positive")


def ghost_state(spec, interior, n, gas=GasModel()):
    """Ghost primitive state for one BC family.

    interior: primitive state(s), shape (..., 4); n: outward unit normal(s).
    Returns (ghost, n_clamped).
    """
    n = np.asarray(n, dtype=np.float64)
    rho_i = interior[..., RHO]
    u_i = interior[..., U]
    v_i = interior[..., V]
    p_i = interior[..., P]

    if spec.kind == msh.SUPERSONIC_IN:
        ghost = np.broadcast_to(spec.state, ad.value_of(interior).shape).copy()
        return ghost, 0

    if spec.kind == msh.SUPERSONIC_OUT:
        return interior, 0

    if spec.kind == msh.SLIP_WALL:
        vn = u_i * n[..., 0] + v_i * n[..., 1]
        gu = u_i - 2.0 * vn * n[..., 0]
        gv = v_i - 2.0 * vn * n[..., 1]
        return ad.stack([rho_i, gu, gv, p_i], axis=-1), 0

    # reference state for the characteristic relations: the interior state
    c0 = ad.sqrt(gas.gamma * p_i / rho_i)
    rho0 = rho_i

    if spec.kind == msh.SUBSONIC_IN:
        wb = spec.state
        rho_b, u_b, v_b, p_b = wb[..., RHO], wb[..., U], wb[..., V], wb[..., P]
        dvn = (u_b - u_i) * n[..., 0] + (v_b - v_i) * n[..., 1]
        p_g = 0.5 * (p_b + p_i - rho0 * c0 * dvn)
        rho_g = rho_b + (p_g - p_b) / (c0 * c0)
        # momentum relation uses rho0*c0 (the printed p0*c0 is dimensionally off)
        coef = (p_b - p_g) / (rho0 * c0)
        gu = u_b - n[..., 0] * coef
        gv = v_b - n[..., 1] * coef
    elif spec.kind == msh.SUBSONIC_OUT:
        p_g = np.broadcast_to(np.asarray(spec.back_pressure, dtype=np.float64),
                              ad.value_of(p_i).shape)
        rho_g = rho_i + (p_g - p_i) / (c0 * c0)
        coef = (p_i - p_g) / (rho0 * c0)
        gu = u_i - n[..., 0] * coef
        gv = v_i - n[..., 1] * coef
    else:
        raise ValueError(f"unsupported boundary kind {spec.kind}")

    n_clamped = int(np.sum(ad.value_of(rho_g) < CLAMP_FLOOR)
                    + np.sum(ad.value_of(p_g) < CLAMP_FLOOR))
    rho_g = ad.maximum(CLAMP_FLOOR, rho_g) if n_clamped else rho_g
    p_g = ad.maximum(CLAMP_FLOOR, p_g) if n_clamped else p_g
    return ad.stack([rho_g, gu, gv, p_g], axis=-1), n_clamped


def ghost_rows(mesh, u, bc_table, gas=GasModel()):
    """Ghost primitive rows for every boundary face, in ghost-slot order.

    bc_table maps tag code -> BCSpec.  Returns (rows (n_ghost, 4), clamps).
    """
    if mesh.n_ghost == 0:
        return None, 0
    bcells = mesh.f_left[mesh.n_iface:]
    normals = mesh.f_normal[mesh.n_iface:]
    parts = []
    clamps = 0
    for code, sl in mesh.tag_slices.items():
        spec = bc_table.get(code)
        if spec is None:
            raise KeyError(f"no BCSpec for boundary tag '{msh.TAG_NAMES[code]}'")
        if spec.kind != code:
            raise ValueError(f"BCSpec kind mismatch for tag '{msh.TAG_NAMES[code]}'")
        interior = ad.take_rows(u, bcells[sl])
        rows, nc = ghost_state(spec, interior, normals[sl], gas)
        parts.append(rows)
        clamps += nc
    rows = parts[0] if len(parts) == 1 else ad.concatenate(parts, axis=0)
    return rows, clamps


def extend_with_ghosts(mesh, u, bc_table, gas=GasModel()):
    """Primitive field extended with ghost rows: shape (n_cells + n_ghost, 4)."""
    rows, clamps = ghost_rows(mesh, u, bc_table, gas)
    if rows is None:
        return u, 0
    return ad.concatenate([u, rows], axis=0), clamps
