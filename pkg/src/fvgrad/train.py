"""Dataset generation, the regularized loss, and the optimization loop.

Reference data comes from the plain solver on a one-level refinement of the
training mesh, projected back by area-weighted means, so every coarse frame
has a matching fine-grid truth at the same time instant.  Supervision is
one step: from the projected state at t, one corrected solver step is
compared against the projected reference at t + dt.

The total loss is the relative-L2 supervision error (scaled by 100) plus
entropy-inequality, total-variation-growth and L1 parameter penalties.
Optimization uses a sign-of-momentum (Lion-style) update with an
exponentially decaying learning rate.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import bc as bclib
from . import mesh as msh
from . import mlcorr, recon, solver
from .euler import GasModel, cons_to_prim, entropy_pair, prim_to_cons

log = logging.getLogger(__name__)

FAMILIES = ("f1", "f2", "f3")


# ---------------------------------------------------------------------------
# initial-condition samplers on [0,1]^2
# ---------------------------------------------------------------------------

def draw_ic_params(family, rng, max_amp=6.0):
    """Draw the random parameters of one initial-condition family."""
    if family == "f1":
        return {"a": rng.uniform(0.0, 1.0, 8), "phi": rng.uniform(0.0, 1.0, 2)}
    if family == "f2":
        return {"p": rng.uniform(0.0, 1.0, (4, 5))}
    if family == "f3":
        return {"p": rng.uniform(0.0, 1.0, (4, 4))}
    raise ValueError(f"unknown family {family!r}")


def _quadrant_index(x, y):
    q = np.empty(x.shape, dtype=np.int64)
    q[(x < 0.5) & (y < 0.5)] = 0
    q[(x >= 0.5) & (y < 0.5)] = 1
    q[(x < 0.5) & (y >= 0.5)] = 2
    q[(x >= 0.5) & (y >= 0.5)] = 3
    return q


def _disk_quadrant_field(points, p):
    """Center disk of radius 0.125 plus the four quadrants (5 values)."""
    x, y = points[:, 0], points[:, 1]
    vals = p[1 + _quadrant_index(x, y)]
    disk = np.hypot(x - 0.5, y - 0.5) <= 0.125
    return np.where(disk, p[0], vals)


def _quadrant_field(points, p):
    return p[_quadrant_index(points[:, 0], points[:, 1])]


def evaluate_ic(family, params, points, max_amp=6.0):
    """Primitive field (rho, u, v, p) of a drawn initial condition."""
    points = np.asarray(points)
    x, y = points[:, 0], points[:, 1]
    if family == "f1":
        a = params["a"]
        s0 = np.sin(4 * np.pi * x + params["phi"][0] * np.pi)
        s1 = np.sin(4 * np.pi * y + params["phi"][1] * np.pi)
        rho = 0.5 * max_amp * (a[0] * s0 + a[1] * s1 + a[0] + a[1] + 0.1)
        u = 3.0 * (a[2] * s0 + a[3] * s1)
        v = 3.0 * (a[4] * s0 + a[5] * s1)
        p = 0.5 * max_amp * (a[6] * s0 + a[7] * s1 + a[6] + a[7] + 0.1)
    elif family == "f2":
        pp = params["p"]
        rho = _disk_quadrant_field(points, max_amp * pp[0] + 0.5)
        u = _disk_quadrant_field(points, max_amp * pp[1])
        v = _disk_quadrant_field(points, max_amp * pp[2])
        p = _disk_quadrant_field(points, max_amp * pp[3] + 0.2)
    elif family == "f3":
        pp = params["p"]
        rho = _quadrant_field(points, max_amp * pp[0] + 0.5)
        u = _quadrant_field(points, max_amp * pp[1])
        v = _quadrant_field(points, max_amp * pp[2])
        p = _quadrant_field(points, max_amp * pp[3] + 0.2)
    else:
        raise ValueError(f"unknown family {family!r}")
    return np.column_stack([rho, u, v, p])


def sample_initial_condition(family, rng, max_amp, points):
    return evaluate_ic(family, draw_ic_params(family, rng, max_amp), points, max_amp)


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

@dataclass
class DatasetSpec:
    count: int = 8
    mix: tuple = (0.5, 0.25, 0.25)
    steps: int = 2000
    co: float = 0.03
    max_amp: float = 6.0
    seed: int = 0
    n_val: int = 4

    def __post_init__(self):
        if abs(sum(self.mix) - 1.0) > 1e-12:
            raise ValueError("family mix fractions must sum to 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    def families(self, count=None):
        count = self.count if count is None else count
        counts = [int(round(f * count)) for f in self.mix]
        while sum(counts) > count:
            counts[int(np.argmax(counts))] -= 1
        while sum(counts) < count:
            counts[int(np.argmin(counts))] += 1
        out = []
        for fam, c in zip(FAMILIES, counts):
            out.extend([fam] * c)
        return out


def substep_count(coarse, fine):
    """Smallest substep count keeping the fine run at or below the coarse Co."""
    return int(np.ceil(coarse.min_sqrt_area / fine.min_sqrt_area - 1e-12))


@dataclass
class Trajectory:
    family: str
    frames: np.ndarray      # (steps+1, n_coarse, 4) projected reference, conservative
    ic_params: dict

    @property
    def n_pairs(self):
        return self.frames.shape[0] - 1


def reference_trajectory(coarse, fine, pm, w0_fine, steps, co, gas=GasModel()):
    """Fine-grid rollout projected onto the coarse mesh at every coarse step."""
    cfg = solver.StepConfig(co=co, gradient="lsq", gas=gas)
    dt = solver.compute_dt(coarse, cfg)
    m = substep_count(coarse, fine)
    frames = np.empty((steps + 1, coarse.n_cells, 4))
    frames[0] = msh.project_fine_to_coarse(w0_fine, pm)
    w = w0_fine
    for k in range(steps):
        for _ in range(m):
            w, _ = solver.step_explicit_euler(fine, w, dt / m, cfg, {},
                                              step_index=k)
        frames[k + 1] = msh.project_fine_to_coarse(w, pm)
    return frames


def generate_dataset(spec, coarse, fine, pm, gas=GasModel(), out_dir=None):
    """Reference trajectories for training and validation.

    Returns (train, val) lists of Trajectory.  With out_dir set, writes one
    frame file per trajectory plus a manifest with seeds and content hashes.
    """
    ss = np.random.SeedSequence(spec.seed)
    seeds = ss.spawn(spec.count + spec.n_val)
    fams = spec.families() + spec.families(spec.n_val)

    def make(fam, seed, tag):
        rng = np.random.default_rng(seed)
        params = draw_ic_params(fam, rng, spec.max_amp)
        u0 = evaluate_ic(fam, params, fine.centroid, spec.max_amp)
        w0 = prim_to_cons(u0, gas)
        frames = reference_trajectory(coarse, fine, pm, w0, spec.steps, spec.co, gas)
        log.info("dataset trajectory %s (%s): %d frames", tag, fam, frames.shape[0])
        return Trajectory(family=fam, frames=frames, ic_params=params)

    train = [make(fams[i], seeds[i], f"train_{i}") for i in range(spec.count)]
    val = [make(fams[spec.count + i], seeds[spec.count + i], f"val_{i}")
           for i in range(spec.n_val)]

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        cfg = solver.StepConfig(co=spec.co)
        dt = solver.compute_dt(coarse, cfg)
        for kind, trajs in (("train", train), ("val", val)):
            for i, tr in enumerate(trajs):
                name = f"{kind}_{i:03d}.frames"
                times = [k * dt for k in range(tr.frames.shape[0])]
                solver.write_frames(out / name, times, tr.frames)
                digest = hashlib.sha256((out / name).read_bytes()).hexdigest()
                entries.append({"file": name, "kind": kind, "family": tr.family,
                                "sha256": digest})
        manifest = {"spec": asdict(spec), "frames_per_trajectory": spec.steps,
                    "trajectories": entries}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return train, val


# ---------------------------------------------------------------------------
# loss terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossWeights:
    tvd: float = 1e-6
    ent: float = 1e5
    reg: float = 1e-4

    def __post_init__(self):
        if min(self.tvd, self.ent, self.reg) < 0:
            raise ValueError("loss weights must be nonnegative")


def loss_supervision(u_ml, u_ref):
    """100 * ||u_ml - u_ref||_2 / ||u_ref||_2 over all cells and variables."""
    ref_norm = float(np.linalg.norm(ad.value_of(u_ref)))
    if ref_norm == 0.0:
        raise ValueError("reference field has zero norm; cannot normalize")
    diff = u_ml - u_ref
    return 100.0 * ad.sqrt(ad.sum(diff * diff)) / ref_norm


def _divergence_gg(mesh, qx_ext, qy_ext):
    """Green-Gauss divergence of a vector field with arithmetic face means."""
    n = mesh.n_cells
    qx_nb = ad.reshape(ad.take_rows(ad.reshape(qx_ext, (-1, 1)), mesh.nbr.ravel()), (n, 3))
    qy_nb = ad.reshape(ad.take_rows(ad.reshape(qy_ext, (-1, 1)), mesh.nbr.ravel()), (n, 3))
    qx_i = ad.reshape(qx_ext[:n], (n, 1))
    qy_i = ad.reshape(qy_ext[:n], (n, 1))
    ns = mesh.cell_n * mesh.cell_slen[:, :, None]
    flux = (0.5 * (qx_i + qx_nb) * ns[:, :, 0] + 0.5 * (qy_i + qy_nb) * ns[:, :, 1])
    return ad.sum(flux, axis=1) / mesh.area


def _entropy_ext(mesh, w, bc_table, gas):
    """Entropy pair on cells and ghost slots, from the primitive ghost rows."""
    eta, qx, qy = entropy_pair(w, gas)
    if mesh.n_ghost == 0:
        return eta, qx, qy
    u = cons_to_prim(w, gas, check=False)
    rows, _ = bclib.ghost_rows(mesh, u, bc_table, gas)
    w_g = prim_to_cons(rows, gas, check=False)
    eta_g, qx_g, qy_g = entropy_pair(w_g, gas, check=False)
    return (ad.concatenate([eta, eta_g]), ad.concatenate([qx, qx_g]),
            ad.concatenate([qy, qy_g]))


def loss_entropy(mesh, w_prev, w_next, dt, gas=GasModel(), bc_table=None):
    """Mean squared positive part of the discrete entropy-inequality residual."""
    bc_table = bc_table or {}
    eta0, qx0, qy0 = _entropy_ext(mesh, w_prev, bc_table, gas)
    eta1, qx1, qy1 = _entropy_ext(mesh, w_next, bc_table, gas)
    div0 = _divergence_gg(mesh, qx0, qy0)
    div1 = _divergence_gg(mesh, qx1, qy1)
    n = mesh.n_cells
    r = (mesh.area * (eta1[:n] - eta0[:n])
         + (mesh.area * dt / 2.0) * (div1 + div0))
    pos = ad.maximum(0.0, r)
    return ad.sum(pos * pos) / mesh.n_cells


def _grad_norm_lsq(mesh, u_ext):
    gx, gy = recon.gradient_lsq(mesh, u_ext)
    return ad.sqrt(ad.sum(gx * gx + gy * gy, axis=1))


def loss_tvd(mesh, u_prev_ext, u_next_ext):
    """Positive growth of the per-cell gradient magnitude between two levels."""
    g0 = _grad_norm_lsq(mesh, u_prev_ext)
    g1 = _grad_norm_lsq(mesh, u_next_ext)
    return ad.sum(ad.maximum(0.0, g1 - g0))


def loss_reg(params_vec):
    """L1 norm of the full parameter vector."""
    return ad.sum(ad.absolute(params_vec))


def total_loss(mesh, dt, w_prev, w_next_ml, u_ref_next, params_vec, weights,
               gas=GasModel(), bc_table=None):
    """Weighted sum of the four loss terms; also returns the parts."""
    bc_table = bc_table or {}
    u_ml = cons_to_prim(w_next_ml, gas, check=False)
    sup = loss_supervision(u_ml, u_ref_next)
    ent = loss_entropy(mesh, w_prev, w_next_ml, dt, gas, bc_table)
    u_prev = cons_to_prim(w_prev, gas, check=False)
    u_prev_ext, _ = bclib.extend_with_ghosts(mesh, u_prev, bc_table, gas)
    u_ml_ext, _ = bclib.extend_with_ghosts(mesh, u_ml, bc_table, gas)
    tvd = loss_tvd(mesh, u_prev_ext, u_ml_ext)
    reg = loss_reg(params_vec)
    total = sup + weights.ent * ent + weights.tvd * tvd + weights.reg * reg
    parts = {"sup": float(ad.value_of(sup)), "ent": float(ad.value_of(ent)),
             "tvd": float(ad.value_of(tvd)), "reg": float(ad.value_of(reg))}
    return total, parts


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def lion_step(p, grad, moment, lr, beta1=0.9, beta2=0.99, weight_decay=0.0):
    """Sign-of-interpolated-momentum update; skips on non-finite gradients."""
    if not np.all(np.isfinite(grad)):
        log.warning("non-finite gradient: optimizer step skipped")
        return p, moment
    c = beta1 * moment + (1.0 - beta1) * grad
    p_new = p - lr * (np.sign(c) + weight_decay * p)
    m_new = beta2 * moment + (1.0 - beta2) * grad
    return p_new, m_new


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    lr: float = 6e-5
    decay: float = 0.9
    epochs: int = 30
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.0
    checkpoint_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must lie in (0, 1]")


@dataclass
class TrainResult:
    params: mlcorr.NetParams
    history: list
    val_sup: list
    aborted: bool = False


HISTORY_COLUMNS = ("epoch", "step", "total", "sup", "ent", "tvd", "reg", "lr", "val_total")


def _sample_loss(mesh, dt, cfg, bc_table, params, w_t, u_ref_next, weights, gas):
    """Traced one-step loss and its gradient for one supervision pair."""
    parts_box = {}

    def program(p_vec):
        w_next, _ = solver.step_explicit_euler(
            mesh, w_t, dt, cfg, bc_table, params, params_vec=p_vec)
        total, parts = total_loss(mesh, dt, w_t, w_next, u_ref_next, p_vec,
                                  weights, gas, bc_table)
        parts_box.update(parts)
        return total

    loss, grad = ad.record_and_backprop(program, params.values)
    return loss, grad, parts_box


def _forward_losses(mesh, dt, cfg, bc_table, params, trajs, weights, gas):
    """Untraced mean losses over every pair of the given trajectories."""
    tot = []
    sup = []
    for tr in trajs:
        for t in range(tr.n_pairs):
            w_t = tr.frames[t]
            try:
                w_next, _ = solver.step_explicit_euler(
                    mesh, w_t, dt, cfg, bc_table, params)
            except solver.SolverError:
                tot.append(np.inf)
                sup.append(np.inf)
                continue
            u_ref = cons_to_prim(tr.frames[t + 1], gas, check=False)
            total, parts = total_loss(mesh, dt, w_t, w_next, u_ref,
                                      params.values, weights, gas, bc_table)
            tot.append(float(ad.value_of(total)))
            sup.append(parts["sup"])
    return float(np.mean(tot)), float(np.mean(sup))


def train(mesh, step_cfg, train_trajs, val_trajs, tcfg=TrainConfig(),
          weights=LossWeights(), net_config=mlcorr.NetConfig(),
          gas=GasModel(), bc_table=None, out_dir=None, init=None):
    """Optimize the correction network on one-step supervision pairs.

    Deterministic for a fixed seed and serial execution.  Checkpoints are
    written per epoch when out_dir is set; training aborts (keeping the
    last finite parameters) if the loss stops being finite.
    """
    bc_table = bc_table or {}
    if not step_cfg.uses_network:
        raise ValueError("training requires an ml_* gradient mode")
    dt = solver.compute_dt(mesh, step_cfg)
    params = init if init is not None else mlcorr.init_params(net_config, tcfg.seed)
    moment = np.zeros_like(params.values)
    rng = np.random.default_rng(tcfg.seed)

    samples = [(i, t) for i, tr in enumerate(train_trajs) for t in range(tr.n_pairs)]
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    history = []
    val_sup = []
    val_total, v_sup = (np.nan, np.nan)
    if val_trajs:
        val_total, v_sup = _forward_losses(mesh, dt, step_cfg, bc_table, params,
                                           val_trajs, weights, gas)
        val_sup.append(v_sup)
    last_good = params.values.copy()
    aborted = False
    global_step = 0

    for epoch in range(tcfg.epochs):
        lr_e = tcfg.lr * tcfg.decay ** epoch
        order = rng.permutation(len(samples))
        for lo in range(0, len(order), tcfg.batch_size):
            batch = order[lo:lo + tcfg.batch_size]
            grad_sum = np.zeros_like(params.values)
            loss_sum = 0.0
            part_sum = {"sup": 0.0, "ent": 0.0, "tvd": 0.0, "reg": 0.0}
            for s in batch:
                i, t = samples[s]
                tr = train_trajs[i]
                u_ref = cons_to_prim(tr.frames[t + 1], gas, check=False)
                loss, grad, parts = _sample_loss(
                    mesh, dt, step_cfg, bc_table, params, tr.frames[t], u_ref,
                    weights, gas)
                grad_sum += grad
                loss_sum += loss
                for k in part_sum:
                    part_sum[k] += parts[k]
            m = len(batch)
            mean_loss = loss_sum / m
            if not np.isfinite(mean_loss):
                log.error("training loss diverged at epoch %d step %d", epoch,
                          global_step)
                aborted = True
                params = params.with_values(last_good)
                break
            new_vals, moment = lion_step(
                params.values, grad_sum / m, moment, lr_e,
                tcfg.beta1, tcfg.beta2, tcfg.weight_decay)
            params = params.with_values(new_vals)
            history.append({
                "epoch": epoch, "step": global_step, "total": mean_loss,
                "sup": part_sum["sup"] / m, "ent": part_sum["ent"] / m,
                "tvd": part_sum["tvd"] / m, "reg": part_sum["reg"] / m,
                "lr": lr_e, "val_total": val_total,
            })
            global_step += 1
        if aborted:
            break
        last_good = params.values.copy()
        if val_trajs:
            val_total, v_sup = _forward_losses(mesh, dt, step_cfg, bc_table,
                                               params, val_trajs, weights, gas)
            val_sup.append(v_sup)
        if out is not None and (epoch + 1) % tcfg.checkpoint_every == 0:
            mlcorr.save_params(params, out / f"ckpt_epoch_{epoch:03d}.gfnn")

    if out is not None:
        mlcorr.save_params(params, out / "params.gfnn")
        write_history_csv(history, out / "history.csv")
    return TrainResult(params=params, history=history, val_sup=val_sup,
                       aborted=aborted)


def write_history_csv(history, path, header_comment=None):
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(HISTORY_COLUMNS) + "\n")
        for row in history:
            fh.write(",".join(solver._fmt(row[c]) for c in HISTORY_COLUMNS) + "\n")


def epoch_mean_total(history, epoch):
    vals = [r["total"] for r in history if r["epoch"] == epoch]
    return float(np.mean(vals)) if vals else np.nan


# ---------------------------------------------------------------------------
# whole-pipeline gradient check (the gate before training)
# ---------------------------------------------------------------------------

def gradient_check(mesh, step_cfg=None, weights=LossWeights(),
                   net_config=mlcorr.NetConfig(), gas=GasModel(), bc_table=None,
                   n_steps=2, rel_tol=1e-5, rel_step=5e-5, seed=0,
                   param_sample=None):
    """Compare reverse-mode and central-difference gradients of the full
    multi-step training loss.  Returns a report dict with the pass flag.

    The default step balances truncation against round-off for this loss
    scale.  Entries outside tolerance are re-checked ("audited") over a
    ladder of smaller and larger steps: genuine adjoint bugs stay wrong at
    every step, whereas finite-difference cancellation noise collapses at
    larger steps and kink-straddling (a parameter within the step of a
    branch tie, e.g. the L1 term at zero) collapses at smaller ones.
    """
    bc_table = bc_table or {}
    if step_cfg is None:
        step_cfg = solver.StepConfig(co=0.03, gradient="ml_lsq")
    rng = np.random.default_rng(seed)
    params = mlcorr.init_params(net_config, seed=seed)
    # random but small head so every layer influences the loss
    vec = params.values.copy()
    vec[vec == 0.0] = rng.normal(0.0, 0.05, int((vec == 0.0).sum()))
    params = params.with_values(vec)

    # mild smooth field with genuine extrema so the limiter branches are live
    x, y = mesh.centroid[:, 0], mesh.centroid[:, 1]
    u0 = np.column_stack([
        1.0 + 0.4 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
        0.4 * np.sin(2 * np.pi * y),
        -0.3 * np.cos(2 * np.pi * x),
        1.0 + 0.3 * np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y),
    ])
    w0 = prim_to_cons(u0, gas)
    dt = solver.compute_dt(mesh, step_cfg)

    # fixed reference trajectory: baseline run from a slightly scaled state
    ref_cfg = solver.StepConfig(co=step_cfg.co, gradient="lsq", gas=gas,
                                limiter=step_cfg.limiter)
    w_ref = w0 * np.array([1.02, 1.0, 1.0, 1.02])
    refs = [cons_to_prim(w_ref, gas)]
    for k in range(n_steps):
        w_ref, _ = solver.step_explicit_euler(mesh, w_ref, dt, ref_cfg, bc_table)
        refs.append(cons_to_prim(w_ref, gas))

    def loss_fn(p_vec):
        w = w0
        total = None
        for t in range(n_steps):
            w_next, _ = solver.step_explicit_euler(
                mesh, w, dt, step_cfg, bc_table, params, params_vec=p_vec)
            term, _ = total_loss(mesh, dt, w, w_next, refs[t + 1], p_vec,
                                 weights, gas, bc_table)
            total = term if total is None else total + term
            w = w_next
        return total

    loss_val, grad_ad = ad.record_and_backprop(loss_fn, params.values)

    def plain(p):
        return float(ad.value_of(loss_fn(p)))

    def central(i, h):
        hi = params.values.copy()
        lo = params.values.copy()
        hi[i] += h
        lo[i] -= h
        return (plain(hi) - plain(lo)) / (2 * h)

    idx = np.arange(params.values.size)
    if param_sample is not None and param_sample < idx.size:
        idx = np.sort(rng.choice(idx.size, size=param_sample, replace=False))
    base = params.values
    grad_fd = np.array([central(i, rel_step * max(1.0, abs(base[i]))) for i in idx])

    ad_sel = grad_ad[idx]
    denom = np.maximum(np.maximum(np.abs(ad_sel), np.abs(grad_fd)), 1e-10)
    rel_err = np.abs(ad_sel - grad_fd) / denom
    ok = rel_err < rel_tol

    audited_ok = []
    audited_bad = []
    for j in np.where(~ok)[0]:
        i = int(idx[j])
        errs = []
        for factor in (0.02, 0.2, 4.0, 20.0, 100.0):
            fd2 = central(i, factor * rel_step * max(1.0, abs(base[i])))
            errs.append(abs(grad_ad[i] - fd2)
                        / max(abs(grad_ad[i]), abs(fd2), 1e-10))
        (audited_ok if min(errs) < rel_tol else audited_bad).append(i)

    report = {
        "pass": bool(ok.mean() >= 0.99 and not audited_bad),
        "loss": loss_val,
        "n_checked": int(idx.size),
        "frac_ok": float(ok.mean()),
        "max_rel_err": float(rel_err.max()),
        "median_rel_err": float(np.median(rel_err)),
        "audited_ok": audited_ok[:50],
        "offenders": audited_bad[:50],
    }
    return report
