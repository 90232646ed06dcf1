"""Learned gradient correction: a small branch/trunk operator network.

Per interior cell the network maps the 3x4 neighbor differences
(u_j - u_i, flattened to 12 values) and the 3 stencil angles to a 3x4
block of correction coefficients alpha.  The branch path normalizes its
input per sample (reversible-normalization style), passes two residual
linear blocks, and emits combine-dimension features per output slot; the
trunk is one linear block on the angles; the two are contracted by an
inner product per output, rescaled by the input scale, squashed to
(-alpha_max, alpha_max), and un-flattened.

Cells touching a boundary get an exactly-zero alpha row, which reduces the
corrected gradients to the plain reconstruction there.  With every
parameter zero the output is identically zero, so the corrected solver
reproduces the baseline bitwise.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import recon

MAGIC = b"GFNN"
VERSION = 1
NORM_EPS = 1e-6


class NetworkError(ValueError):
    def __init__(self, message, layer=None):
        super().__init__(message if layer is None else f"{message} (layer={layer})")
        self.layer = layer


@dataclass(frozen=True)
class NetConfig:
    width: int = 8          # branch block width
    combine: int = 8        # inner-product dimension between branch and trunk
    n_neighbors: int = 3
    n_vars: int = 4
    alpha_max: float = 0.5

    @property
    def n_in(self):
        return self.n_neighbors * self.n_vars

    def layer_shapes(self):
        w, p, m = self.width, self.combine, self.n_in
        return [
            ("norm_scale", (m,)),
            ("norm_shift", (m,)),
            ("branch0_skip", (w, m)),
            ("branch0_w", (w, m)),
            ("branch0_b", (w,)),
            ("branch1_w", (w, w)),
            ("branch1_b", (w,)),
            ("trunk_w", (p, 3)),
            ("trunk_b", (p,)),
            ("head_w", (m * p, w)),
            ("head_b", (m * p,)),
        ]


@dataclass
class NetParams:
    """Flat parameter vector plus its layer shape table."""

    config: NetConfig
    values: np.ndarray
    table: list = field(default_factory=list)  # (name, shape, offset)

    @property
    def count(self):
        return int(sum(int(np.prod(s)) for _, s, _ in self.table))

    def view(self, vec=None):
        """Per-layer views of the flat vector (plain array or traced)."""
        vec = self.values if vec is None else vec
        out = {}
        for name, shape, off in self.table:
            size = int(np.prod(shape))
            out[name] = ad.reshape(vec[off:off + size], shape)
        return out

    def with_values(self, vec):
        return NetParams(self.config, vec, self.table)


def _make_table(config):
    table = []
    off = 0
    for name, shape in config.layer_shapes():
        table.append((name, shape, off))
        off += int(np.prod(shape))
    return table, off


def zero_params(config=NetConfig()):
    table, n = _make_table(config)
    return NetParams(config, np.zeros(n), table)


def init_params(config=NetConfig(), seed=0):
    """Seeded initialization; the output head starts at zero so the initial
    corrected solver coincides with the baseline."""
    table, n = _make_table(config)
    rng = np.random.default_rng(seed)
    vec = np.zeros(n)
    p = NetParams(config, vec, table)
    for name, shape, off in table:
        size = int(np.prod(shape))
        if name == "norm_scale":
            vec[off:off + size] = 1.0
        elif name.endswith("_w") and not name.startswith("head"):
            fan_in = shape[1]
            vec[off:off + size] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size)
        elif name == "branch0_skip":
            vec[off:off + size] = rng.normal(0.0, 1.0 / np.sqrt(shape[1]), size)
    return p


def _check_finite(name, x):
    if not np.all(np.isfinite(ad.value_of(x))):
        raise NetworkError("non-finite activation", layer=name)


def network_forward(params, du, theta, vec=None):
    """Correction coefficients for stencil inputs.

    du: neighbor differences, (3, 4) for one cell or (N, 3, 4) batched;
    theta: stencil angles, (3,) or (N, 3), in the same neighbor order.
    Returns alpha with the shape of du.
    """
    cfg = params.config
    duv = ad.value_of(du)
    single = duv.ndim == 2
    if duv.shape[-2:] != (cfg.n_neighbors, cfg.n_vars):
        raise NetworkError(f"du must end with shape {(cfg.n_neighbors, cfg.n_vars)}, "
                           f"got {duv.shape}")
    tv = ad.value_of(theta)
    if tv.shape[-1] != 3 or (tv.ndim == 1) != single:
        raise NetworkError(f"theta shape {tv.shape} does not match du {duv.shape}")
    if single:
        du = ad.reshape(du, (1, cfg.n_neighbors, cfg.n_vars))
        theta = ad.reshape(theta, (1, 3))

    n = ad.value_of(du).shape[0]
    L = params.view(vec)

    z = ad.reshape(du, (n, cfg.n_in))
    mu = ad.mean(z, axis=1, keepdims=True)
    centered = z - mu
    var = ad.mean(centered * centered, axis=1, keepdims=True)
    scale = ad.sqrt(var + NORM_EPS)
    zn = centered / scale
    zn = zn * L["norm_scale"] + L["norm_shift"]
    _check_finite("norm", zn)

    h = ad.matmul(zn, _t(L["branch0_skip"])) + ad.tanh(
        ad.matmul(zn, _t(L["branch0_w"])) + L["branch0_b"])
    _check_finite("branch0", h)
    h = h + ad.tanh(ad.matmul(h, _t(L["branch1_w"])) + L["branch1_b"])
    _check_finite("branch1", h)

    branch = ad.reshape(ad.matmul(h, _t(L["head_w"])) + L["head_b"],
                        (n, cfg.n_in, cfg.combine))
    trunk = ad.tanh(ad.matmul(theta, _t(L["trunk_w"])) + L["trunk_b"])
    _check_finite("trunk", trunk)

    raw = ad.sum(branch * ad.reshape(trunk, (n, 1, cfg.combine)), axis=2)
    raw = raw * scale
    alpha = cfg.alpha_max * ad.tanh(raw * (1.0 / cfg.alpha_max))
    _check_finite("head", alpha)

    alpha = ad.reshape(alpha, (n, cfg.n_neighbors, cfg.n_vars))
    if single:
        alpha = ad.reshape(alpha, (cfg.n_neighbors, cfg.n_vars))
    return alpha


def _t(x):
    return ad.transpose(x)


def alpha_for_field(mesh, u, params, vec=None):
    """Alpha field for a primitive state: zero rows on boundary-adjacent cells."""
    n = mesh.n_cells
    uv = ad.value_of(u)
    if uv.shape[0] == n and mesh.n_ghost:
        # neighbor differences of masked rows are irrelevant; reuse the
        # interior value for ghost slots so the gather stays well defined
        filler = ad.take_rows(u, mesh.f_left[mesh.n_iface:])
        u_ext = ad.concatenate([u, filler], axis=0)
    else:
        u_ext = u
    u_in = u_ext[:n]
    du = recon.neighbor_deltas(mesh, u_in, recon.neighbor_values(mesh, u_ext))
    return masked_alpha(mesh, params, du, vec=vec)


def masked_alpha(mesh, params, du, vec=None):
    """Network forward over all cells with boundary rows forced to zero."""
    alpha = network_forward(params, du, mesh.angles, vec=vec)
    mask = mesh.interior_mask[:, None, None]
    return ad.where(mask, alpha, 0.0)


def corrected_gradient_gg(mesh, u_ext, alpha):
    """Green-Gauss gradient with learned per-neighbor face weights."""
    return recon.gradient_gg(mesh, u_ext, alpha=alpha)


def corrected_gradient_lsq(mesh, u_ext, alpha):
    """Least-squares gradient with (1 + alpha) reweighted right-hand side."""
    return recon.gradient_lsq(mesh, u_ext, alpha=alpha)


# ---------------------------------------------------------------------------
# checkpoint format: magic, version, config json, shape table, raw float64
# ---------------------------------------------------------------------------

def save_params(params, path):
    cfg_blob = json.dumps({
        "width": params.config.width,
        "combine": params.config.combine,
        "n_neighbors": params.config.n_neighbors,
        "n_vars": params.config.n_vars,
        "alpha_max": params.config.alpha_max,
    }).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(cfg_blob)))
        fh.write(cfg_blob)
        fh.write(struct.pack("<I", len(params.table)))
        for name, shape, off in params.table:
            nb = name.encode()
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", len(shape)))
            for s in shape:
                fh.write(struct.pack("<I", s))
            fh.write(struct.pack("<Q", off))
        fh.write(np.ascontiguousarray(params.values, dtype="<f8").tobytes())


def load_params(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if raw[:4] != MAGIC:
            raise NetworkError("bad checkpoint magic")
        pos = 4
        version, = struct.unpack_from("<I", raw, pos)
        pos += 4
        if version != VERSION:
            raise NetworkError(f"unsupported checkpoint version {version}")
        blob_len, = struct.unpack_from("<I", raw, pos)
        pos += 4
        cfg = NetConfig(**json.loads(raw[pos:pos + blob_len].decode()))
        pos += blob_len
        n_entries, = struct.unpack_from("<I", raw, pos)
        pos += 4
        table = []
        for _ in range(n_entries):
            nlen, = struct.unpack_from("<H", raw, pos)
            pos += 2
            name = raw[pos:pos + nlen].decode()
            pos += nlen
            ndim, = struct.unpack_from("<B", raw, pos)
            pos += 1
            shape = tuple(struct.unpack_from(f"<{ndim}I", raw, pos))
            pos += 4 * ndim
            off, = struct.unpack_from("<Q", raw, pos)
            pos += 8
            table.append((name, shape, off))
        total = sum(int(np.prod(s)) for _, s, _ in table)
        vals = np.frombuffer(raw[pos:], dtype="<f8")
        if vals.size != total:
            raise NetworkError(f"checkpoint holds {vals.size} parameters, "
                               f"shape table expects {total}")
    except struct.error as exc:
        raise NetworkError(f"truncated checkpoint: {exc}") from exc
    expected, n = _make_table(cfg)
    if [(a, b) for a, b, _ in table] != [(a, b) for a, b, _ in expected] or n != total:
        raise NetworkError("shape table does not match this build's architecture")
    return NetParams(cfg, vals.astype(np.float64), table)
