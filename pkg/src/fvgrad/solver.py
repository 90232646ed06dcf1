"""Semi-discrete finite-volume residual and explicit Euler time stepping.

One step: synthesize ghost states, (optionally) evaluate the correction
network, reconstruct limited primitive gradients, extrapolate face states,
apply the Rusanov flux, accumulate the residual and update.  The time step
is fixed per run, dt = co * min sqrt(|C|), so runs on a coarse mesh, its
refinement and the corrected solver all share time instants.

Gradient modes: "gg", "lsq" (plain) and "ml_gg", "ml_lsq" (corrected).
With all network parameters zero the corrected modes reproduce the plain
modes bitwise.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import bc as bclib
from . import mlcorr, recon
from .euler import GasModel, cons_to_prim, max_wave_speed, prim_to_cons

FRAME_MAGIC = b"FVFR"
FRAME_VERSION = 1

GRADIENT_MODES = ("gg", "lsq", "ml_gg", "ml_lsq")


class SolverError(RuntimeError):
    def __init__(self, message, cell=None, step=None):
        loc = "".join(
            f" ({k}={v})" for k, v in (("cell", cell), ("step", step)) if v is not None)
        super().__init__(message + loc)
        self.cell = cell
        self.step = step


@dataclass
class StepConfig:
    co: float = 0.01
    gradient: str = "lsq"
    limiter: bool = True
    limiter_k: float = 5.0
    gas: GasModel = field(default_factory=GasModel)
    save_every: int = 1

    def __post_init__(self):
        if self.co <= 0:
            raise ValueError("co must be positive")
        if self.gradient not in GRADIENT_MODES:
            raise ValueError(f"gradient must be one of {GRADIENT_MODES}")

    @property
    def uses_network(self):
        return self.gradient.startswith("ml_")


@dataclass
class RolloutRecord:
    times: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def append(self, t, w, diag=None):
        if self.times and t <= self.times[-1]:
            raise ValueError("frame times must be strictly increasing")
        self.times.append(float(t))
        self.frames.append(np.array(ad.value_of(w), copy=True))
        if diag is not None:
            self.diagnostics.append(diag)


def compute_dt(mesh, cfg):
    """dt = co * min_j sqrt(|C_j|); state independent, constant per run."""
    return cfg.co * mesh.min_sqrt_area


def rusanov_flux(w_l, w_r, n, gas=GasModel()):
    """Godunov-type flux: central average plus max-wave-speed dissipation."""
    from .euler import physical_flux

    f_l = physical_flux(w_l, n, gas)
    f_r = physical_flux(w_r, n, gas)
    s = ad.maximum(max_wave_speed(w_l, n, gas), max_wave_speed(w_r, n, gas))
    if ad.value_of(s).ndim:
        s = ad.reshape(s, ad.value_of(s).shape + (1,))
    return 0.5 * (f_l + f_r) - 0.5 * s * (w_l - w_r)


def residual(mesh, w, cfg, bc_table=None, params=None, params_vec=None):
    """Per-cell flux sum R_i; the semi-discrete form is |C_i| dw_i/dt + R_i = 0.

    Returns (R, diag) where diag carries the clamp / first-order fallback
    counters and the largest wave speed seen at any face.
    """
    bc_table = bc_table or {}
    gas = cfg.gas
    u = cons_to_prim(w, gas)
    u_ext, n_clamp = bclib.extend_with_ghosts(mesh, u, bc_table, gas)
    u_in = u_ext[:mesh.n_cells] if mesh.n_ghost else u_ext

    u_nb = recon.neighbor_values(mesh, u_ext)
    du = recon.neighbor_deltas(mesh, u_in, u_nb)

    alpha = None
    if cfg.uses_network:
        if params is None:
            raise SolverError("gradient mode requires network parameters")
        alpha = mlcorr.masked_alpha(mesh, params, du, vec=params_vec)

    if cfg.gradient.endswith("gg"):
        grad = recon.gradient_gg(mesh, u_ext, alpha=alpha, u_nb=u_nb)
    else:
        grad = recon.gradient_lsq(mesh, u_ext, alpha=alpha, du=du)

    if cfg.limiter:
        phi = recon.venkat_limiter(mesh, u_ext, grad, cfg.limiter_k)
    else:
        phi = np.ones((mesh.n_cells, 4))

    u_l, u_r, n_fallback = recon.muscl_face_values(mesh, u_ext, grad, phi)
    w_l = prim_to_cons(u_l, gas, check=False)
    w_r = prim_to_cons(u_r, gas, check=False)

    flux = rusanov_flux(w_l, w_r, mesh.f_normal, gas)
    contrib = flux * mesh.f_len[:, None]
    parts = ad.concatenate([contrib, -contrib[:mesh.n_iface]], axis=0)
    r = ad.segment_sum(parts, mesh.rs_idx, mesh.n_cells)

    s_max = float(np.max(ad.value_of(
        ad.maximum(max_wave_speed(w_l, mesh.f_normal, gas, check=False),
                   max_wave_speed(w_r, mesh.f_normal, gas, check=False)))))
    diag = {"bc_clamps": n_clamp, "fallback_cells": n_fallback, "max_wave_speed": s_max}
    return r, diag


def step_explicit_euler(mesh, w, dt, cfg, bc_table=None, params=None,
                        params_vec=None, step_index=None):
    """w - (dt/|C|) R; raises if any updated cell leaves the admissible set."""
    r, diag = residual(mesh, w, cfg, bc_table, params, params_vec)
    w_next = w - (dt / mesh.area)[:, None] * r

    wv = ad.value_of(w_next)
    rho = wv[:, 0]
    e_int = wv[:, 3] - 0.5 * (wv[:, 1] ** 2 + wv[:, 2] ** 2) / np.where(rho > 0, rho, 1.0)
    bad = (rho <= 0.0) | (e_int <= 0.0)
    if bad.any():
        raise SolverError("step rejected: non-admissible update",
                          cell=int(np.argmax(bad)), step=step_index)
    return w_next, diag


def rollout(mesh, w0, n_steps, cfg, bc_table=None, params=None, record=None):
    """Advance n_steps with a fixed dt, saving every cfg.save_every-th frame.

    Deterministic for fixed inputs.  Diagnostics per saved frame: totals of
    the conserved quantities, fallback counter and the realized CFL number
    co * max wave speed.
    """
    dt = compute_dt(mesh, cfg)
    rec = record if record is not None else RolloutRecord()
    w = np.asarray(ad.value_of(w0), dtype=np.float64)
    rec.append(0.0, w, _frame_diag(mesh, 0, 0.0, w, None, cfg))
    for k in range(1, n_steps + 1):
        w, diag = step_explicit_euler(mesh, w, dt, cfg, bc_table, params,
                                      step_index=k)
        w = ad.value_of(w)
        if k % cfg.save_every == 0 or k == n_steps:
            rec.append(k * dt, w, _frame_diag(mesh, k, k * dt, w, diag, cfg))
    return rec


def _frame_diag(mesh, step, t, w, diag, cfg):
    totals = (mesh.area[:, None] * w).sum(axis=0)
    row = {
        "step": step, "time": t,
        "mass": totals[0], "mom_x": totals[1], "mom_y": totals[2],
        "energy": totals[3],
        "fallbacks": 0 if diag is None else diag["fallback_cells"],
    }
    if diag is not None:
        row["cfl"] = cfg.co * diag["max_wave_speed"]
    return row


def write_diagnostics_csv(record, path, header_comment=None):
    cols = ["step", "time", "mass", "mom_x", "mom_y", "energy", "fallbacks"]
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(cols) + "\n")
        for row in record.diagnostics:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# binary frame dumps: per frame a little-endian header
# (magic, version u32, n_cells u32, n_comp u32, time f64) then row-major f64
# ---------------------------------------------------------------------------

def write_frames(path, times, frames):
    with open(path, "wb") as fh:
        for t, w in zip(times, frames):
            w = np.ascontiguousarray(w, dtype="<f8")
            fh.write(FRAME_MAGIC)
            fh.write(struct.pack("<IIId", FRAME_VERSION, w.shape[0], w.shape[1], t))
            fh.write(w.tobytes())


def read_frames(path):
    times = []
    frames = []
    with open(path, "rb") as fh:
        raw = fh.read()
    pos = 0
    while pos < len(raw):
        if raw[pos:pos + 4] != FRAME_MAGIC:
            raise SolverError("bad frame magic in dump file")
        pos += 4
        version, n_cells, n_comp, t = struct.unpack_from("<IIId", raw, pos)
        if version != FRAME_VERSION:
            raise SolverError(f"unsupported frame version {version}")
        pos += struct.calcsize("<IIId")
        count = n_cells * n_comp
        w = np.frombuffer(raw, dtype="<f8", count=count, offset=pos)
        pos += 8 * count
        times.append(t)
        frames.append(w.reshape(n_cells, n_comp).astype(np.float64))
    return times, frames
