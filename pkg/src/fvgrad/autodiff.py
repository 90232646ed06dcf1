"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tape`` records array operations as they execute; ``Tape.backward``
replays them in reverse, accumulating adjoints.  Operations are exposed as
module-level functions (``sqrt``, ``where``, ``segment_sum``, ...) that
accept either plain numpy arrays or traced ``Var`` objects, so the same
solver code runs untraced (fast path) or traced (training path).

Differentiable primitive set: + - * / ** sqrt log exp tanh abs min max,
``where`` with a non-differentiated condition, reductions, matmul, row
gather/scatter and reshaping.  Nondifferentiable points follow the
taken-branch convention: ``maximum``/``minimum`` send the adjoint to the
first argument at ties, ``where`` follows its condition, ``abs`` uses the
sign (zero at zero).  Comparisons on traced values return plain boolean
arrays, i.e. branches are frozen at the recorded values.

All values and adjoints are float64.  Recording the same program twice
yields bitwise-identical gradients.
"""

import numpy as np

from . import kernels


class TraceError(ValueError):
    """Domain error (zero divide, log/sqrt of non-positive) while recording."""

    def __init__(self, message, op, node_index):
        super().__init__(f"{message} (op={op}, node={node_index})")
        self.op = op
        self.node_index = node_index


class Tape:
    """Ordered record of one traced execution."""

    def __init__(self):
        self.nodes = []

    def var(self, value):
        """Create a root (leaf) variable whose gradient will be accumulated."""
        return Var(np.asarray(value, dtype=np.float64), self, None)

    @property
    def node_count(self):
        return len(self.nodes)

    def backward(self, seeds):
        """Run the reverse sweep from (var, adjoint) seed pairs."""
        for v, g in seeds:
            g = np.asarray(g, dtype=np.float64)
            if g.shape != v.value.shape:
                g = np.broadcast_to(g, v.value.shape).astype(np.float64)
            v._acc(g)
        for node in reversed(self.nodes):
            if node.grad is not None and node.vjp is not None:
                node.vjp(node.grad)


class Var:
    """Traced array: a value plus its position in the recording tape."""

    __slots__ = ("value", "grad", "vjp", "tape")

    # keep numpy from broadcasting a Var as an object scalar; binary ufuncs
    # then defer to the reflected dunders below
    __array_ufunc__ = None

    def __init__(self, value, tape, vjp):
        self.value = value
        self.grad = None
        self.vjp = vjp
        self.tape = tape
        tape.nodes.append(self)

    def _acc(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    # arithmetic
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __neg__(self):
        return negative(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return getitem(self, key)

    # comparisons freeze branches: plain boolean arrays, never recorded
    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)

    def __eq__(self, other):
        return self.value == value_of(other)

    def __ne__(self, other):
        return self.value != value_of(other)

    __hash__ = object.__hash__

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def is_var(x):
    return isinstance(x, Var)


def value_of(x):
    """Underlying numpy value of a Var, or the input coerced to an array."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x)


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _unbroadcast(g, shape):
    """Reduce an adjoint back to the shape of a broadcast operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _node(tape, value, vjp):
    return Var(value, tape, vjp)


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return np.add(a, b)
    av, bv = value_of(a), value_of(b)
    out = av + bv

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(g, bv.shape))

    return _node(tape, out, vjp)


def subtract(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return np.subtract(a, b)
    av, bv = value_of(a), value_of(b)
    out = av - bv

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(-g, bv.shape))

    return _node(tape, out, vjp)


def multiply(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return np.multiply(a, b)
    av, bv = value_of(a), value_of(b)
    out = av * bv

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g * bv, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(g * av, bv.shape))

    return _node(tape, out, vjp)


def divide(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return np.divide(a, b)
    av, bv = value_of(a), value_of(b)
    if np.any(bv == 0.0):
        raise TraceError("division by zero", "divide", len(tape.nodes))
    out = av / bv

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g / bv, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(-g * out / bv, bv.shape))

    return _node(tape, out, vjp)


def negative(a):
    if not isinstance(a, Var):
        return np.negative(a)
    out = -a.value

    def vjp(g):
        a._acc(-g)

    return _node(a.tape, out, vjp)


def power(a, exponent):
    """Elementwise power with a constant (non-traced) exponent."""
    if isinstance(exponent, Var):
        raise TypeError("traced exponents are not supported")
    if not isinstance(a, Var):
        return np.power(a, exponent)
    out = np.power(a.value, exponent)
    av = a.value

    def vjp(g):
        a._acc(g * exponent * np.power(av, exponent - 1))

    return _node(a.tape, out, vjp)


def sqrt(a):
    if not isinstance(a, Var):
        return np.sqrt(a)
    if np.any(a.value <= 0.0):
        raise TraceError("sqrt of non-positive value", "sqrt", len(a.tape.nodes))
    out = np.sqrt(a.value)

    def vjp(g):
        a._acc(g * (0.5 / out))

    return _node(a.tape, out, vjp)


def log(a):
    if not isinstance(a, Var):
        return np.log(a)
    if np.any(a.value <= 0.0):
        raise TraceError("log of non-positive value", "log", len(a.tape.nodes))
    out = np.log(a.value)
    av = a.value

    def vjp(g):
        a._acc(g / av)

    return _node(a.tape, out, vjp)


def exp(a):
    if not isinstance(a, Var):
        return np.exp(a)
    out = np.exp(a.value)

    def vjp(g):
        a._acc(g * out)

    return _node(a.tape, out, vjp)


def tanh(a):
    if not isinstance(a, Var):
        return np.tanh(a)
    out = np.tanh(a.value)

    def vjp(g):
        a._acc(g * (1.0 - out * out))

    return _node(a.tape, out, vjp)


def absolute(a):
    if not isinstance(a, Var):
        return np.abs(a)
    out = np.abs(a.value)
    s = np.sign(a.value)

    def vjp(g):
        a._acc(g * s)

    return _node(a.tape, out, vjp)


def maximum(a, b):
    """Elementwise max; at ties the adjoint goes to the first argument."""
    tape = _tape_of(a, b)
    if tape is None:
        return np.maximum(a, b)
    av, bv = value_of(a), value_of(b)
    take_a = av >= bv
    out = np.where(take_a, av, bv)

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(np.where(take_a, g, 0.0), av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(np.where(take_a, 0.0, g), bv.shape))

    return _node(tape, out, vjp)


def minimum(a, b):
    """Elementwise min; at ties the adjoint goes to the first argument."""
    tape = _tape_of(a, b)
    if tape is None:
        return np.minimum(a, b)
    av, bv = value_of(a), value_of(b)
    take_a = av <= bv
    out = np.where(take_a, av, bv)

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(np.where(take_a, g, 0.0), av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(np.where(take_a, 0.0, g), bv.shape))

    return _node(tape, out, vjp)


def where(cond, a, b):
    """Select per element; cond is never differentiated."""
    cond = value_of(cond)
    tape = _tape_of(a, b)
    if tape is None:
        return np.where(cond, a, b)
    av, bv = value_of(a), value_of(b)
    out = np.where(cond, av, bv)

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(np.where(cond, g, 0.0), av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(np.where(cond, 0.0, g), bv.shape))

    return _node(tape, out, vjp)


# ---------------------------------------------------------------------------
# reductions and shaping
# ---------------------------------------------------------------------------

def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy naming
    if not isinstance(a, Var):
        return np.sum(a, axis=axis, keepdims=keepdims)
    out = np.sum(a.value, axis=axis, keepdims=keepdims)
    shape = a.value.shape

    def vjp(g):
        gg = np.asarray(g)
        if axis is not None and not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            gg = np.expand_dims(gg, axes)
        a._acc(np.broadcast_to(gg, shape).astype(np.float64))

    return _node(a.tape, out, vjp)


def mean(a, axis=None, keepdims=False):
    if not isinstance(a, Var):
        return np.mean(a, axis=axis, keepdims=keepdims)
    n = a.value.size if axis is None else np.prod(
        [a.value.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return multiply(sum(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def matmul(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return np.matmul(a, b)
    av, bv = value_of(a), value_of(b)
    out = av @ bv

    def vjp(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape))

    return _node(tape, out, vjp)


def reshape(a, shape):
    if not isinstance(a, Var):
        return np.reshape(a, shape)
    old = a.value.shape
    out = a.value.reshape(shape)

    def vjp(g):
        a._acc(g.reshape(old))

    return _node(a.tape, out, vjp)


def transpose(a):
    """2-D transpose; the adjoint transposes back."""
    if not isinstance(a, Var):
        return np.asarray(a).T
    out = a.value.T

    def vjp(g):
        a._acc(g.T)

    return _node(a.tape, out, vjp)


def getitem(a, key):
    """Basic indexing (slices / ints); adjoint scatters into zeros."""
    if not isinstance(a, Var):
        return a[key]
    out = a.value[key]
    shape = a.value.shape

    def vjp(g):
        gz = np.zeros(shape, dtype=np.float64)
        gz[key] += g
        a._acc(gz)

    return _node(a.tape, out, vjp)


def concatenate(parts, axis=0):
    tape = _tape_of(*parts)
    if tape is None:
        return np.concatenate(parts, axis=axis)
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if isinstance(p, Var):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                p._acc(g[tuple(sl)])

    return _node(tape, out, vjp)


def stack(parts, axis=0):
    tape = _tape_of(*parts)
    if tape is None:
        return np.stack(parts, axis=axis)
    vals = [value_of(p) for p in parts]
    out = np.stack(vals, axis=axis)

    def vjp(g):
        for k, p in enumerate(parts):
            if isinstance(p, Var):
                p._acc(np.take(g, k, axis=axis))

    return _node(tape, out, vjp)


# ---------------------------------------------------------------------------
# mesh primitives: row gather and scatter-add
# ---------------------------------------------------------------------------

def take_rows(a, idx):
    """Row gather a[idx] along axis 0; the adjoint is a scatter-add."""
    idx = np.asarray(idx)
    if not isinstance(a, Var):
        return kernels.gather_rows(a, idx) if a.ndim == 2 else a[idx]
    out = kernels.gather_rows(a.value, idx) if a.value.ndim == 2 else a.value[idx]
    shape = a.value.shape

    def vjp(g):
        if g.ndim == 2 and len(shape) == 2:
            a._acc(kernels.scatter_add_rows(idx, g, shape[0]))
        else:
            gz = np.zeros(shape, dtype=np.float64)
            np.add.at(gz, idx, g)
            a._acc(gz)

    return _node(a.tape, out, vjp)


def segment_sum(vals, idx, n_rows):
    """Scatter-add rows of vals (K, C) into (n_rows, C) at indices idx."""
    idx = np.asarray(idx)
    if not isinstance(vals, Var):
        return kernels.scatter_add_rows(idx, vals, n_rows)
    out = kernels.scatter_add_rows(idx, vals.value, n_rows)

    def vjp(g):
        vals._acc(kernels.gather_rows(g, idx))

    return _node(vals.tape, out, vjp)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def record_and_backprop(program, params):
    """Trace ``program(params_var)`` to a scalar and return (value, gradient).

    The gradient is exact reverse-mode differentiation of the recorded
    execution path with respect to every entry of ``params``.
    """
    tape = Tape()
    p = tape.var(params)
    out = program(p)
    if not isinstance(out, Var) or out.value.size != 1:
        raise TypeError("program must return a scalar traced value")
    tape.backward([(out, np.array(1.0))])
    grad = p.grad if p.grad is not None else np.zeros_like(p.value)
    return float(out.value), grad


def checkpointed_rollout_grad(step_fn, loss_fn, w0, n_steps, params, segment_len=None):
    """Gradient of a summed per-step loss over a rollout, with checkpointing.

    step_fn(w, p) -> w_next and loss_fn(t, w_t, w_next) -> scalar must both
    accept either plain arrays or traced Vars.  The rollout is re-recorded
    segment by segment in reverse, so peak tape size is one segment, not the
    whole trajectory.  Returns (loss, grad, info) where info carries the
    peak recorded node count.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if segment_len is None:
        segment_len = n_steps
    segment_len = max(1, min(segment_len, n_steps))

    w0 = np.asarray(w0, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)

    # forward pass, keeping states only at segment starts
    starts = list(range(0, n_steps, segment_len))
    saved = {}
    w = w0
    for t in range(n_steps):
        if t in starts:
            saved[t] = w
        w = step_fn(w, params)

    grad = np.zeros_like(params)
    adjoint = None
    loss_total = 0.0
    peak_nodes = 0

    for s in reversed(starts):
        steps_here = min(segment_len, n_steps - s)
        tape = Tape()
        wv = tape.var(saved[s])
        pv = tape.var(params)
        terms = []
        cur = wv
        for k in range(steps_here):
            nxt = step_fn(cur, pv)
            terms.append(loss_fn(s + k, cur, nxt))
            cur = nxt
        seg_loss = terms[0]
        for term in terms[1:]:
            seg_loss = add(seg_loss, term)
        seeds = [(seg_loss, np.array(1.0))]
        if adjoint is not None:
            seeds.append((cur, adjoint))
        tape.backward(seeds)
        loss_total += float(seg_loss.value)
        if pv.grad is not None:
            grad += pv.grad
        adjoint = wv.grad if wv.grad is not None else np.zeros_like(w0)
        peak_nodes = max(peak_nodes, tape.node_count)

    return loss_total, grad, {"peak_nodes": peak_nodes}


def finite_diff_grad(fn, params, rel_step=1e-6):
    """Central finite differences of a scalar fn(params) -> float."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    flat = params.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        h = rel_step * max(1.0, abs(flat[i]))
        p_hi = flat.copy()
        p_lo = flat.copy()
        p_hi[i] += h
        p_lo[i] -= h
        out[i] = (fn(p_hi.reshape(params.shape)) - fn(p_lo.reshape(params.shape))) / (2 * h)
    return grad
