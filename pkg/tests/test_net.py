import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pccc.augment import AugmentConfig
from pccc.errors import CorruptCheckpointError, ShapeMismatchError, ValidationError, VersionMismatchError
from pccc.geometry import ColoredPointCloud
from pccc.imaging import normalize
from pccc.net import (
    AdamState,
    Architecture,
    TrainConfig,
    adam_step,
    angular_loss,
    angular_loss_grad,
    backward,
    forward,
    forward_batch,
    init_model,
    load_model,
    loss_and_grads,
    predict,
    read_history,
    save_model,
    train,
    write_history,
)
from pccc.net.checkpoint import MAGIC

TINY = Architecture(group1=(5,), group2=(6, 8), head=(7, 5))


def live_model(arch=TINY, seed=0, dtype=np.float64):
    """Random model with random biases so ReLUs are neither all on nor all off."""
    m = init_model(arch, seed, dtype)
    r = np.random.default_rng(seed + 100)
    for layer in m.layers:
        layer.bias[:] = r.normal(0, 0.3, layer.bias.shape)
    m.head[-1].bias[:3] = np.abs(m.head[-1].bias[:3]) + 0.5
    return m


def points(seed, n=32):
    r = np.random.default_rng(seed)
    return np.concatenate([r.normal(size=(n, 3)), r.uniform(0.05, 1, (n, 3))], 1)


class TestArchitecture:
    def test_default_widths(self):
        shapes = Architecture().layer_shapes()
        assert shapes[0] == (64, 6) and shapes[2] == (1024, 128)
        assert shapes[3] == (512, 1088) and shapes[-1] == (4, 128)

    def test_rejects(self):
        with pytest.raises(ValidationError):
            Architecture(group2=())
        with pytest.raises(ValidationError):
            Architecture(out_width=3)

    def test_param_count(self):
        m = init_model()
        assert m.num_parameters() == sum(o * i + o for o, i in Architecture().layer_shapes())
        assert m.dtype == np.float32


class TestForward:
    def test_constant_head(self):
        m = live_model()
        c = np.array([0.3, -0.2, 0.7])
        m.head[-1].weight[:3] = 0
        m.head[-1].bias[:3] = c
        res = forward(m, points(1))
        np.testing.assert_array_equal(res.e_global, normalize(np.maximum(c, 0) + 1e-4))
        assert res.w_s.sum() == pytest.approx(1.0)

    @given(st.integers(0, 10**6))
    def test_permutation(self, seed):
        m = live_model(seed=seed % 7)
        x = points(seed)
        perm = np.random.default_rng(seed).permutation(len(x))
        a, b = forward(m, x), forward(m, x[perm])
        assert np.linalg.norm(a.e_global - b.e_global) < 1e-12
        np.testing.assert_allclose(b.p_illum, a.p_illum[perm], rtol=1e-12)
        np.testing.assert_allclose(b.w_s, a.w_s[perm], rtol=1e-12)

    def test_straight_line_oracle(self):
        arch = Architecture(group1=(3,), group2=(4,), head=(5,))
        m = live_model(arch, seed=3)
        x = points(2, n=4)
        (w1, b1), (w2, b2), (w3, b3), (w4, b4) = [(l.weight, l.bias) for l in m.layers]

        def dense(w, b, v, act=True):
            out = []
            for o in range(len(b)):
                s = b[o]
                for i in range(len(v)):
                    s += w[o][i] * v[i]
                out.append(max(s, 0.0) if act else s)
            return out

        local = [dense(w1, b1, list(p)) for p in x]
        feats = [dense(w2, b2, l) for l in local]
        glob = [max(f[c] for f in feats) for c in range(4)]
        outs = [dense(w4, b4, dense(w3, b3, l + glob), act=False) for l in local]
        illum = [[max(o[c], 0.0) + 1e-4 for c in range(3)] for o in outs]
        top = max(o[3] for o in outs)
        ex = [math.exp(o[3] - top) for o in outs]
        w = [e / sum(ex) for e in ex]
        e = [sum(w[i] * illum[i][c] for i in range(4)) for c in range(3)]
        norm = math.sqrt(sum(v * v for v in e))

        res = forward(m, x)
        np.testing.assert_allclose(res.p_illum, illum, rtol=1e-12)
        np.testing.assert_allclose(res.w_s, w, rtol=1e-12)
        np.testing.assert_allclose(res.e_global, [v / norm for v in e], rtol=1e-12)

    def test_batch_matches_single(self):
        m = live_model()
        xs = np.stack([points(i) for i in range(3)])
        batch = forward_batch(m, xs)
        for i in range(3):
            np.testing.assert_allclose(batch.e_global[i], forward(m, xs[i]).e_global, rtol=1e-12)

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatchError):
            forward(live_model(), np.zeros((4, 5)))


class TestLoss:
    def test_clamp_floor(self):
        e = normalize([0.3, 0.5, 0.2])
        val = angular_loss(e, e)
        assert val == pytest.approx(math.acos(1 - 1e-7), rel=1e-9)
        assert val < 1e-3

    def test_orthogonal(self):
        assert angular_loss([1.0, 0, 0], [0, 1.0, 0]) == pytest.approx(math.pi / 2)

    def test_scale_invariant(self):
        e = np.array([0.3, 0.5, 0.2])
        g = np.array([0.2, 0.2, 0.6])
        assert angular_loss(2 * e, g) == pytest.approx(angular_loss(e, g), rel=1e-14)

    def test_grad_at_optimum(self):
        e = np.array([0.3, 0.5, 0.2])
        assert np.linalg.norm(angular_loss_grad(e, e)) < 1e-3

    @given(st.integers(0, 10**6))
    def test_grad_fd(self, seed):
        r = np.random.default_rng(seed)
        e, g = r.uniform(0.1, 1, 3), r.uniform(0.1, 1, 3)
        if angular_loss(e, g) < 1e-2:
            return
        h = 1e-6
        fd = [(angular_loss(e + h * d, g) - angular_loss(e - h * d, g)) / (2 * h) for d in np.eye(3)]
        np.testing.assert_allclose(angular_loss_grad(e, g), fd, rtol=1e-5, atol=1e-8)


def _fd_check(model, x, gt, idx, h=1e-6):
    _, _, grads = loss_and_grads(model, x, gt)
    params = model.parameters()
    out = []
    for pi, flat in idx:
        p = params[pi].reshape(-1)
        old = p[flat]
        p[flat] = old + h
        lp = loss_and_grads(model, x, gt)[0]
        p[flat] = old - h
        lm = loss_and_grads(model, x, gt)[0]
        p[flat] = old
        out.append((grads[pi].reshape(-1)[flat], (lp - lm) / (2 * h)))
    return out


class TestBackward:
    def test_matches_finite_differences(self):
        m = live_model(seed=4)
        x = np.stack([points(7), points(8)])
        gt = np.stack([normalize([0.5, 0.6, 0.3]), normalize([0.2, 0.5, 0.8])])
        r = np.random.default_rng(0)
        idx = [(pi, int(r.integers(p.size))) for pi, p in enumerate(m.parameters()) for _ in range(4)]
        for a, fd in _fd_check(m, x, gt, idx):
            assert abs(a - fd) <= 1e-5 * max(abs(a), abs(fd), 1e-4)

    def test_dead_channel_zero_grad(self):
        m = live_model(seed=1)
        last_g2 = m.group2[-1]
        last_g2.bias[2] = -1e3  # channel 2 never fires, so it is never a live argmax
        _, _, grads = loss_and_grads(m, points(3)[None], normalize([0.4, 0.5, 0.6])[None])
        n1 = len(m.arch.group1)
        gw = grads[2 * (n1 + len(m.arch.group2) - 1)]
        gb = grads[2 * (n1 + len(m.arch.group2) - 1) + 1]
        assert np.all(gw[2] == 0) and gb[2] == 0

    def test_trace_mismatch(self):
        m = live_model()
        res = forward(m, points(0))
        with pytest.raises(ShapeMismatchError):
            backward(m, res.trace, np.ones((2, 3)))


class TestAdam:
    def test_zero_grad(self):
        m = live_model()
        before = [p.copy() for p in m.parameters()]
        adam_step(m, [np.zeros_like(p) for p in m.parameters()], AdamState.for_model(m))
        for a, b in zip(before, m.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_first_step_sign(self):
        m = live_model()
        before = [p.copy() for p in m.parameters()]
        r = np.random.default_rng(0)
        grads = [np.where(r.random(p.shape) < 0.5, -1.0, 1.0) * r.uniform(0.01, 5, p.shape) for p in m.parameters()]
        adam_step(m, grads, AdamState.for_model(m, lr=3e-4))
        for a, b, g in zip(before, m.parameters(), grads):
            np.testing.assert_allclose(b - a, -3e-4 * np.sign(g), atol=1e-6)

    def test_deterministic(self):
        a, b = live_model(seed=2), live_model(seed=2)
        grads = [np.full_like(p, 0.1) for p in a.parameters()]
        sa, sb = AdamState.for_model(a), AdamState.for_model(b)
        for _ in range(3):
            adam_step(a, grads, sa)
            adam_step(b, grads, sb)
        for p, q in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(p, q)

    def test_shape_mismatch(self):
        m = live_model()
        with pytest.raises(ShapeMismatchError):
            adam_step(m, [np.zeros(1)], AdamState.for_model(m))


def _cloud(seed, n=300):
    return ColoredPointCloud(points(seed, n))


class TestTrain:
    def test_single_sample_overfit(self):
        cfg = TrainConfig(epochs=200, batch_size=1, n_points=64, seed=0)
        model, hist = train([(_cloud(0), normalize([0.6, 0.5, 0.2]))], cfg)
        assert hist[-1] < hist[0]
        assert model.trained

    def test_deterministic(self):
        data = [(_cloud(i), normalize([0.5 + 0.1 * i, 0.5, 0.4])) for i in range(4)]
        cfg = TrainConfig(epochs=3, batch_size=2, n_points=32, seed=5, arch=TINY)
        _, h1 = train(data, cfg)
        _, h2 = train(data, cfg)
        assert h1 == h2

    def test_empty(self):
        with pytest.raises(ValidationError):
            train([], TrainConfig(epochs=1))

    def test_config_rejects(self):
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)
        with pytest.raises(ValidationError):
            TrainConfig(lr=0)

    def test_predict_unit(self):
        e = predict(init_model(TINY), _cloud(1), n_points=64)
        assert np.linalg.norm(e) == pytest.approx(1.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        m = live_model(Architecture(), dtype=np.float32)
        save_model(tmp_path / "m.pccc", m)
        back = load_model(tmp_path / "m.pccc")
        x = points(0, 256).astype(np.float32)
        a, b = forward(m, x), forward(back, x)
        np.testing.assert_array_equal(a.e_global, b.e_global)
        np.testing.assert_array_equal(a.p_illum, b.p_illum)
        assert back.trained and back.arch == m.arch

    def test_truncated(self, tmp_path):
        save_model(tmp_path / "m.pccc", init_model(TINY))
        data = (tmp_path / "m.pccc").read_bytes()
        (tmp_path / "t.pccc").write_bytes(data[:-5])
        with pytest.raises(CorruptCheckpointError):
            load_model(tmp_path / "t.pccc")

    def test_wrong_version(self, tmp_path):
        save_model(tmp_path / "m.pccc", init_model(TINY))
        data = bytearray((tmp_path / "m.pccc").read_bytes())
        data[len(MAGIC)] = 9
        (tmp_path / "v.pccc").write_bytes(bytes(data))
        with pytest.raises(VersionMismatchError):
            load_model(tmp_path / "v.pccc")

    def test_garbage(self, tmp_path):
        (tmp_path / "g.pccc").write_bytes(b"hello world")
        with pytest.raises(CorruptCheckpointError):
            load_model(tmp_path / "g.pccc")

    def test_history(self, tmp_path):
        h = [0.5, 0.25, 0.125 + 1e-17]
        write_history(tmp_path / "h.csv", h)
        assert read_history(tmp_path / "h.csv") == h
