"""Point-set illuminant regressor with hand-written forward and backward passes.

Per-point shared MLPs lift (x, y, z, r, g, b) to a wide feature, a channel-wise
max over points gives a global descriptor, and a head maps each point's
[local feature | global feature] to a 3-vector illuminant guess plus one
logit. The softmax of the logits weights the per-point guesses into the
global estimate.

All layers compute ``a @ W.T + b`` with ``W`` stored out x in. The first head
layer is split into a local block and a global block so the global term is
computed once per cloud rather than once per point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError, ShapeMismatchError, ValidationError, ZeroVectorError

ILLUM_FLOOR = 1e-4
COS_MARGIN = 1e-7
# output layer starts as a near-uniform, near-neutral predictor; with zero
# biases the rectified illuminant outputs die under early Adam steps
OUT_ILLUM_BIAS = 1.0
OUT_WEIGHT_GAIN = 0.1


@dataclass(frozen=True)
class Architecture:
    in_width: int = 6
    group1: tuple = (64,)
    group2: tuple = (128, 1024)
    head: tuple = (512, 256, 128)
    out_width: int = 4

    def __post_init__(self):
        if self.in_width != 6 or self.out_width != 4:
            raise ValidationError("input width must be 6 and output width 4")
        if not (self.group1 and self.group2 and self.head):
            raise ValidationError("feature groups and head each need at least one hidden layer")

    @property
    def local_width(self) -> int:
        return self.group1[-1]

    @property
    def global_width(self) -> int:
        return self.group2[-1]

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(out, in) per layer in declaration order: group1, group2, head."""
        shapes = []
        prev = self.in_width
        for w in self.group1 + self.group2:
            shapes.append((w, prev))
            prev = w
        prev = self.local_width + self.global_width
        for w in self.head + (self.out_width,):
            shapes.append((w, prev))
            prev = w
        return shapes


@dataclass
class LinearLayer:
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class PcccModel:
    arch: Architecture
    layers: list
    trained: bool = False

    @property
    def dtype(self):
        return self.layers[0].weight.dtype

    @property
    def group1(self) -> list:
        return self.layers[: len(self.arch.group1)]

    @property
    def group2(self) -> list:
        n1 = len(self.arch.group1)
        return self.layers[n1 : n1 + len(self.arch.group2)]

    @property
    def head(self) -> list:
        return self.layers[len(self.arch.group1) + len(self.arch.group2) :]

    def parameters(self) -> list:
        """Weights and biases in declaration order (shared, not copied)."""
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def astype(self, dtype) -> "PcccModel":
        layers = [LinearLayer(l.weight.astype(dtype), l.bias.astype(dtype)) for l in self.layers]
        return PcccModel(self.arch, layers, self.trained)

    def copy(self) -> "PcccModel":
        return self.astype(self.dtype)


def init_model(arch: Architecture = Architecture(), seed: int = 0, dtype=np.float32) -> PcccModel:
    """Kaiming fan-in normal weights and zero biases, except the output layer:
    weights scaled by OUT_WEIGHT_GAIN and illuminant biases set to
    OUT_ILLUM_BIAS (the logit bias stays 0)."""
    rng = np.random.default_rng(seed)
    layers = []
    for out_w, in_w in arch.layer_shapes():
        w = rng.standard_normal((out_w, in_w)) * np.sqrt(2.0 / in_w)
        layers.append(LinearLayer(w.astype(dtype), np.zeros(out_w, dtype=dtype)))
    out = layers[-1]
    out.weight[...] = out.weight * OUT_WEIGHT_GAIN
    out.bias[:3] = OUT_ILLUM_BIAS
    return PcccModel(arch, layers)


@dataclass
class ForwardTrace:
    """Everything backward needs. Arrays are flattened to (B*N, width)."""

    batch: int
    npoints: int
    acts: list = field(default_factory=list)  # layer inputs, then the last hidden output
    local: np.ndarray = None
    global_feat: np.ndarray = None  # (B, G)
    argmax: np.ndarray = None  # (B, G) point index per channel
    illum_raw: np.ndarray = None  # (B, N, 3)
    weights: np.ndarray = None  # (B, N) softmax, float64
    p_illum: np.ndarray = None  # (B, N, 3), float64
    e_hat: np.ndarray = None  # (B, 3) unnormalized global estimate


@dataclass
class ForwardResult:
    e_global: np.ndarray
    p_illum: np.ndarray
    w_s: np.ndarray
    trace: ForwardTrace


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0, out=z)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    # summing in sorted order makes the weights exactly permutation-equivariant
    return ez / np.sort(ez, axis=-1).sum(axis=-1, keepdims=True)


def forward_batch(model: PcccModel, x: np.ndarray) -> ForwardResult:
    """Forward pass on a (B, N, 6) stack of clouds with equal point counts.

    Returns per-cloud unit ``e_global`` (B, 3), ``p_illum`` (B, N, 3) and
    softmax weights ``w_s`` (B, N). The final softmax-weighted reduction is
    done in float64 whatever the model dtype.
    """
    arch = model.arch
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[2] != arch.in_width or x.shape[1] < 1:
        raise ShapeMismatchError(f"expected (B, N, {arch.in_width}) input, got {x.shape}")
    b, n, _ = x.shape
    tr = ForwardTrace(b, n)
    h = np.ascontiguousarray(x.reshape(b * n, -1), dtype=model.dtype)
    for layer in model.group1:
        tr.acts.append(h)
        h = _relu(h @ layer.weight.T + layer.bias)
    tr.local = h
    for layer in model.group2:
        tr.acts.append(h)
        h = _relu(h @ layer.weight.T + layer.bias)
    feat = h.reshape(b, n, -1)
    # argmax returns the first maximum: ties go to the lowest point index
    tr.argmax = feat.argmax(axis=1)
    tr.global_feat = np.take_along_axis(feat, tr.argmax[:, None, :], axis=1)[:, 0, :]
    tr.acts.append(h)  # group2 output, for its relu mask

    first = model.head[0]
    lw = arch.local_width
    g_term = tr.global_feat @ first.weight[:, lw:].T + first.bias  # (B, H0)
    z = (tr.local @ first.weight[:, :lw].T).reshape(b, n, -1) + g_term[:, None, :]
    h = _relu(z.reshape(b * n, -1))
    for layer in model.head[1:-1]:
        tr.acts.append(h)
        h = _relu(h @ layer.weight.T + layer.bias)
    tr.acts.append(h)
    last = model.head[-1]
    out = (h @ last.weight.T + last.bias).reshape(b, n, -1)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite activation in forward pass")

    tr.illum_raw = out[..., :3]
    tr.p_illum = np.maximum(tr.illum_raw.astype(np.float64), 0.0) + ILLUM_FLOOR
    tr.weights = _softmax(out[..., 3].astype(np.float64))
    # sum_i w_i p_i written as p_min + sum_i w_i (p_i - p_min): equal because the
    # weights sum to one, and exact when every point predicts the same colour
    p_min = tr.p_illum.min(axis=1)
    tr.e_hat = p_min + np.einsum("bn,bnc->bc", tr.weights, tr.p_illum - p_min[:, None, :])
    e_global = tr.e_hat / np.sqrt(np.sum(tr.e_hat * tr.e_hat, axis=-1, keepdims=True))
    return ForwardResult(e_global, tr.p_illum, tr.weights, tr)


def forward(model: PcccModel, points: np.ndarray) -> ForwardResult:
    """Forward pass on a single (N, 6) cloud; outputs drop the batch axis."""
    points = np.asarray(points)
    if points.ndim != 2:
        raise ShapeMismatchError(f"expected (N, 6) points, got {points.shape}")
    res = forward_batch(model, points[None])
    return ForwardResult(res.e_global[0], res.p_illum[0], res.w_s[0], res.trace)


def angular_loss(e_hat: np.ndarray, e_gt: np.ndarray) -> np.ndarray:
    """Recovery angle in radians along the last axis, cosine clamped inside +-1."""
    cos, _, _ = _cosine(e_hat, e_gt)
    return np.arccos(np.clip(cos, -1 + COS_MARGIN, 1 - COS_MARGIN))


def _cosine(e_hat, e_gt):
    e_hat = np.asarray(e_hat, dtype=np.float64)
    e_gt = np.asarray(e_gt, dtype=np.float64)
    nh = np.sqrt(np.sum(e_hat * e_hat, axis=-1))
    ng = np.sqrt(np.sum(e_gt * e_gt, axis=-1))
    if np.any(nh == 0) or np.any(ng == 0):
        raise ZeroVectorError("angular loss of a zero vector")
    return np.sum(e_hat * e_gt, axis=-1) / (nh * ng), nh, ng


def angular_loss_grad(e_hat: np.ndarray, e_gt: np.ndarray) -> np.ndarray:
    """d(angular_loss)/d(e_hat); zero where the cosine clamp is active."""
    e_hat = np.asarray(e_hat, dtype=np.float64)
    e_gt = np.asarray(e_gt, dtype=np.float64)
    cos, nh, ng = _cosine(e_hat, e_gt)
    inside = (cos > -1 + COS_MARGIN) & (cos < 1 - COS_MARGIN)
    dcos = e_gt / (nh * ng)[..., None] - (cos / nh**2)[..., None] * e_hat
    dl = np.where(inside, -1.0 / np.sqrt(np.where(inside, 1 - cos * cos, 1.0)), 0.0)
    return dl[..., None] * dcos


def backward(model: PcccModel, trace: ForwardTrace, e_gt: np.ndarray) -> list:
    """Gradients of the batch-mean angular loss w.r.t. every parameter.

    ``e_gt`` is (B, 3) (or (3,) for a single cloud). Returns arrays in the
    order of :meth:`PcccModel.parameters`.
    """
    b, n = trace.batch, trace.npoints
    e_gt = np.asarray(e_gt, dtype=np.float64).reshape(-1, 3)
    if e_gt.shape[0] != b or trace.p_illum is None or trace.p_illum.shape[:2] != (b, n):
        raise ShapeMismatchError("trace does not match labels; re-run forward")
    arch = model.arch
    dt = model.dtype

    de = angular_loss_grad(trace.e_hat, e_gt) / b  # (B, 3)
    dp = trace.weights[:, :, None] * de[:, None, :]
    dw = np.einsum("bnc,bc->bn", trace.p_illum, de)
    dlogit = trace.weights * (dw - np.sum(trace.weights * dw, axis=1, keepdims=True))
    draw = dp * (trace.illum_raw > 0)
    dz = np.concatenate([draw, dlogit[..., None]], axis=2).reshape(b * n, -1).astype(dt)

    grads = [None] * len(model.layers)
    acts = trace.acts
    n1, n2 = len(arch.group1), len(arch.group2)
    # head layers after the first: acts[-1] is the input of the last layer
    head_inputs = acts[n1 + n2 + 1 :]
    for i in range(len(model.head) - 1, 0, -1):
        layer = model.head[i]
        a_in = head_inputs[i - 1]
        grads[n1 + n2 + i] = (dz.T @ a_in, dz.sum(axis=0))
        dz = (dz @ layer.weight) * (a_in > 0)

    first = model.head[0]
    lw = arch.local_width
    dz_sum = dz.reshape(b, n, -1).sum(axis=1)  # (B, H0)
    dW = np.empty_like(first.weight)
    dW[:, :lw] = dz.T @ trace.local
    dW[:, lw:] = dz_sum.T @ trace.global_feat
    grads[n1 + n2] = (dW, dz_sum.sum(axis=0))
    dlocal = dz @ first.weight[:, :lw]
    dglobal = dz_sum @ first.weight[:, lw:]  # (B, G)

    dfeat = np.zeros((b, n, arch.global_width), dtype=dt)
    np.put_along_axis(dfeat, trace.argmax[:, None, :], dglobal[:, None, :], axis=1)
    g2_out = acts[n1 + n2]
    dz = dfeat.reshape(b * n, -1) * (g2_out > 0)
    for i in range(n2 - 1, -1, -1):
        layer = model.group2[i]
        a_in = acts[n1 + i]
        grads[n1 + i] = (dz.T @ a_in, dz.sum(axis=0))
        da = dz @ layer.weight
        if i == 0:
            da += dlocal
        dz = da * (a_in > 0)
    for i in range(n1 - 1, -1, -1):
        layer = model.group1[i]
        a_in = acts[i]
        grads[i] = (dz.T @ a_in, dz.sum(axis=0))
        if i > 0:
            dz = (dz @ layer.weight) * (a_in > 0)
    return [g for pair in grads for g in pair]


def loss_and_grads(model: PcccModel, x: np.ndarray, e_gt: np.ndarray):
    """Batch-mean loss (radians), per-cloud losses and parameter gradients."""
    res = forward_batch(model, x)
    losses = angular_loss(res.trace.e_hat, np.asarray(e_gt).reshape(-1, 3))
    return float(losses.mean()), losses, backward(model, res.trace, e_gt)
