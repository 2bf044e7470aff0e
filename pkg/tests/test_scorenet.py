"""Score-network forward/backward and optimizer-recipe tests.

The hand-written backward pass is checked against central finite
differences of the full batched DSM objective with the randomness frozen
(fixed t, z, x0), parameter by parameter, over many random small configs.
"""

from __future__ import annotations

import numpy as np
import pytest

from scorewave import (
    ConfigError,
    NoiseSchedule,
    OptimizerConfig,
    ScoreNet,
    ScoreNetConfig,
    SigmaEmbedding,
    TrainingError,
    load_checkpoint,
    save_checkpoint,
    sigma_embed,
    train,
)
from scorewave.scorenet import adam_step, decay_mask, dsm_loss_and_grads, init_optimizer, lr_at


def frozen_dsm_loss(net, x_t, z, sig, c):
    """The DSM batch loss with (t, z, x0) held fixed — a deterministic
    function of the parameters, suitable for finite differencing."""
    s = net.forward(x_t, c, sig)
    resid = sig[:, None] * s + z
    return 0.5 * np.sum(resid * resid) / x_t.shape[0]


def check_gradients(net, c, rng, rel_tol=1e-4, h=1e-5):
    """Compare backward() against central differences for every parameter.

    The denominator floor keeps finite-difference roundoff (~1e-10 on a
    loss of order one) from dominating entries whose true gradient is
    essentially zero.
    """
    batch = 3
    x0 = rng.normal(size=(batch, net.config.dim_x))
    t = rng.uniform(size=batch)
    sig = NoiseSchedule().sigma_at(t)
    z = rng.standard_normal(x0.shape)
    x_t = x0 + sig[:, None] * z

    s = net.forward(x_t, c, sig, train=True)
    resid = sig[:, None] * s + z
    grads = net.backward(sig[:, None] * resid / batch)

    worst = 0.0
    for name, p in net.parameters().items():
        g = grads[name]
        assert g.shape == p.shape
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        idx = rng.choice(flat_p.size, size=min(6, flat_p.size), replace=False)
        for j in idx:
            orig = flat_p[j]
            step = h * max(1.0, abs(orig))
            flat_p[j] = orig + step
            lo_hi = frozen_dsm_loss(net, x_t, z, sig, c)
            flat_p[j] = orig - step
            lo_lo = frozen_dsm_loss(net, x_t, z, sig, c)
            flat_p[j] = orig
            fd = (lo_hi - lo_lo) / (2 * step)
            denom = max(abs(fd), abs(flat_g[j]), 1e-6)
            worst = max(worst, abs(fd - flat_g[j]) / denom)
    assert worst < rel_tol, f"worst relative gradient error {worst:.3e}"


def small_config(rng):
    return ScoreNetConfig(
        dim_x=int(rng.integers(1, 4)),
        dim_c=int(rng.integers(0, 4)),
        hidden=tuple(int(rng.integers(3, 7)) for _ in range(int(rng.integers(1, 3)))),
        n_pairs=int(rng.integers(2, 5)),
        embed_dim=int(rng.integers(4, 7)),
    )


def randomize(net, rng, scale=0.3):
    """Random nonzero parameters everywhere (zero init would hide errors)."""
    for p in net.parameters().values():
        p += scale * rng.standard_normal(p.shape)


class TestGradients:
    def test_random_configs(self):
        """>= 20 random small configs, every parameter kind, rel err < 1e-4."""
        rng = np.random.default_rng(100)
        for trial in range(20):
            cfg = small_config(rng)
            net = ScoreNet(cfg, np.random.default_rng(trial))
            assert net.n_parameters() <= 500
            randomize(net, rng)
            c = rng.normal(size=cfg.dim_c) if cfg.dim_c else None
            check_gradients(net, c, rng)

    def test_batched_conditioning_gradients(self):
        """Per-example conditioning rows also backpropagate correctly."""
        rng = np.random.default_rng(101)
        cfg = ScoreNetConfig(dim_x=2, dim_c=3, hidden=(6, 5), n_pairs=3, embed_dim=5)
        net = ScoreNet(cfg, np.random.default_rng(0))
        randomize(net, rng)
        c = rng.normal(size=(3, cfg.dim_c))
        check_gradients(net, c, rng)

    def test_sigma_embedding_gradients(self):
        """Gradient of a linear probe of the embedding vs finite differences."""
        rng = np.random.default_rng(102)
        emb = SigmaEmbedding(n_pairs=4, embed_dim=6, rng=np.random.default_rng(1))
        for p in emb.params.values():
            p += 0.3 * rng.standard_normal(p.shape)
        probe = rng.normal(size=6)
        sigma = np.array([0.37])

        cache = {}
        emb.forward(sigma, cache)
        grads = emb.backward(cache, probe[None, :])
        h = 1e-6
        for name, p in emb.params.items():
            flat_p = p.reshape(-1)
            flat_g = grads[name].reshape(-1)
            for j in rng.choice(flat_p.size, size=min(5, flat_p.size), replace=False):
                orig = flat_p[j]
                flat_p[j] = orig + h
                hi = float(probe @ emb.forward(sigma)[0])
                flat_p[j] = orig - h
                lo = float(probe @ emb.forward(sigma)[0])
                flat_p[j] = orig
                fd = (hi - lo) / (2 * h)
                assert abs(fd - flat_g[j]) / max(abs(fd), abs(flat_g[j]), 1e-8) < 1e-4

    def test_duplicate_example_matches_single(self):
        """Batch mean over a duplicated example equals the single-example
        gradient (linearity of the batch mean)."""
        rng = np.random.default_rng(103)
        cfg = ScoreNetConfig(dim_x=2, dim_c=0, hidden=(5,), n_pairs=3, embed_dim=4)
        net = ScoreNet(cfg, np.random.default_rng(2))
        randomize(net, rng)
        x_t = rng.normal(size=(1, 2))
        z = rng.normal(size=(1, 2))
        sig = np.array([0.2])

        s = net.forward(x_t, None, sig, train=True)
        g1 = net.backward(sig[:, None] * (sig[:, None] * s + z) / 1)

        x2, z2, s2 = np.repeat(x_t, 2, 0), np.repeat(z, 2, 0), np.repeat(sig, 2)
        s = net.forward(x2, None, s2, train=True)
        g2 = net.backward(s2[:, None] * (s2[:, None] * s + z2) / 2)
        for name in g1:
            np.testing.assert_allclose(g2[name], g1[name], rtol=1e-12, atol=1e-15)

    def test_zero_upstream_gives_zero_grads(self):
        net = ScoreNet(ScoreNetConfig(dim_x=2, hidden=(4,), n_pairs=2, embed_dim=3),
                       np.random.default_rng(3))
        net.forward(np.zeros((2, 2)), None, 0.5, train=True)
        grads = net.backward(np.zeros((2, 2)))
        assert all(np.all(g == 0) for g in grads.values())

    def test_backward_without_forward_raises(self):
        net = ScoreNet(ScoreNetConfig(dim_x=1, hidden=(3,), n_pairs=2, embed_dim=3),
                       np.random.default_rng(0))
        with pytest.raises(TrainingError):
            net.backward(np.zeros((1, 1)))


class TestForward:
    def test_fresh_network_is_zero_score(self):
        """Zero-initialized output layer: S = 0 for any input."""
        net = ScoreNet(ScoreNetConfig(dim_x=3, dim_c=2, hidden=(8, 8)), np.random.default_rng(4))
        rng = np.random.default_rng(5)
        out = net.forward(rng.normal(size=(10, 3)), rng.normal(size=2), 0.7)
        np.testing.assert_array_equal(out, np.zeros((10, 3)))

    def test_film_identity_matches_plain_mlp(self):
        """With FiLM projections zeroed, scales 1 and shifts 0, the network
        is an ordinary PReLU MLP — computed here directly for comparison."""
        cfg = ScoreNetConfig(dim_x=2, dim_c=0, hidden=(7, 6), n_pairs=3, embed_dim=5)
        net = ScoreNet(cfg, np.random.default_rng(6))
        rng = np.random.default_rng(7)
        for name, p in net.mlp.params.items():
            if name.endswith((".w", ".b", ".a")):
                p += 0.3 * rng.standard_normal(p.shape)
        x = rng.normal(size=(4, 2))
        out = net.forward(x, None, 0.3)

        h = x
        for i in range(2):
            pre = h @ net.mlp.params[f"l{i}.w"] + net.mlp.params[f"l{i}.b"]
            a = net.mlp.params[f"l{i}.a"]
            h = np.where(pre > 0, pre, a * pre)
        ref = h @ net.mlp.params["out.w"] + net.mlp.params["out.b"]
        np.testing.assert_allclose(out, ref, rtol=1e-14)

    def test_forward_is_pure(self):
        net = ScoreNet(ScoreNetConfig(dim_x=2, dim_c=1, hidden=(5,)), np.random.default_rng(8))
        randomize(net, np.random.default_rng(9))
        x = np.random.default_rng(10).normal(size=(3, 2))
        a = net.forward(x, np.array([0.5]), 0.9)
        b = net.forward(x, np.array([0.5]), 0.9)
        np.testing.assert_array_equal(a, b)

    def test_embedding_shape_and_determinism(self):
        """Default sizes: 32 frequency pairs expand to 256 channels."""
        emb = SigmaEmbedding(n_pairs=32, embed_dim=256, rng=np.random.default_rng(11))
        e1 = sigma_embed(emb, 0.05)
        e2 = sigma_embed(emb, 0.05)
        assert e1.shape == (256,)
        np.testing.assert_array_equal(e1, e2)

    def test_embedding_rejects_nonpositive_sigma(self):
        emb = SigmaEmbedding(n_pairs=2, embed_dim=3, rng=np.random.default_rng(12))
        for bad in (0.0, -1.0, np.nan):
            with pytest.raises(ConfigError):
                sigma_embed(emb, bad)

    def test_frequencies_frozen(self):
        emb = SigmaEmbedding(n_pairs=4, embed_dim=4, rng=np.random.default_rng(13))
        with pytest.raises(ValueError):
            emb.frequencies[0] = 1.0

    def test_dim_mismatch_raises(self):
        net = ScoreNet(ScoreNetConfig(dim_x=2, dim_c=2, hidden=(4,)), np.random.default_rng(14))
        with pytest.raises(ConfigError):
            net.forward(np.zeros((3, 5)), np.zeros(2), 0.5)
        with pytest.raises(ConfigError):
            net.forward(np.zeros((3, 2)), np.zeros(4), 0.5)
        with pytest.raises(ConfigError):
            net.forward(np.zeros((3, 2)), None, 0.5)

    def test_unbatched_vector_roundtrip(self):
        net = ScoreNet(ScoreNetConfig(dim_x=3, hidden=(4,)), np.random.default_rng(15))
        randomize(net, np.random.default_rng(16))
        x = np.array([0.1, -0.2, 0.3])
        single = net.forward(x, None, 0.2)
        batched = net.forward(x[None, :], None, 0.2)
        assert single.shape == (3,)
        np.testing.assert_allclose(single, batched[0], rtol=1e-15)

    def test_parameter_count_is_config_function(self):
        cfg = ScoreNetConfig(dim_x=2, dim_c=1, hidden=(5, 4), n_pairs=3, embed_dim=6)
        n1 = ScoreNet(cfg, np.random.default_rng(17)).n_parameters()
        n2 = ScoreNet(cfg, np.random.default_rng(99)).n_parameters()
        assert n1 == n2
        # embedding: (6*6+6+6)+(6*6+6+6)+(6*6+6+6) with first in = 2*3
        emb = (6 * 6 + 6 + 6) * 3 + (2 * 3 - 6) * 6
        # mlp layer l: w + b + a + gw + gb + hw + hb
        l0 = 3 * 5 + 5 + 5 + 6 * 5 + 5 + 6 * 5 + 5
        l1 = 5 * 4 + 4 + 4 + 6 * 4 + 4 + 6 * 4 + 4
        out = 4 * 2 + 2
        assert n1 == emb + l0 + l1 + out


class TestOptimizer:
    def test_lr_endpoints(self):
        """LR at iteration 0 is the warm-up start (peak/125); at the end of
        warm-up it is exactly the peak."""
        cfg = OptimizerConfig(total_steps=1000, peak_lr=2e-4)
        assert lr_at(cfg, 0) == pytest.approx(2e-4 / 125)
        assert lr_at(cfg, cfg.warmup_steps) == pytest.approx(2e-4)

    def test_lr_cosine_tail(self):
        cfg = OptimizerConfig(total_steps=1000, peak_lr=2e-4)
        lrs = [lr_at(cfg, s) for s in range(cfg.warmup_steps, 1001)]
        assert all(b <= a + 1e-18 for a, b in zip(lrs, lrs[1:]))
        assert lr_at(cfg, 1000) == pytest.approx(0.0, abs=1e-12)

    def test_warmup_is_linear(self):
        cfg = OptimizerConfig(total_steps=2000, peak_lr=1e-3)
        w = cfg.warmup_steps
        lrs = np.array([lr_at(cfg, s) for s in range(w + 1)])
        np.testing.assert_allclose(np.diff(lrs), np.diff(lrs)[0], rtol=1e-10)

    def test_decay_mask_excludes_biases_and_slopes(self):
        net = ScoreNet(ScoreNetConfig(dim_x=2, dim_c=1, hidden=(4,)), np.random.default_rng(18))
        mask = decay_mask(net.parameters())
        for name, decays in mask.items():
            if name.endswith((".b", ".a", ".gb", ".hb")):
                assert not decays, name
            else:
                assert decays, name

    def test_masked_parameters_static_under_zero_grads(self):
        """With zero gradients, decayed weights shrink but biases and PReLU
        slopes stay exactly put."""
        net = ScoreNet(ScoreNetConfig(dim_x=2, hidden=(4,)), np.random.default_rng(19))
        randomize(net, np.random.default_rng(20))
        params = net.parameters()
        before = {k: v.copy() for k, v in params.items()}
        state = init_optimizer(params, OptimizerConfig(total_steps=10, weight_decay=0.1))
        zero = {k: np.zeros_like(v) for k, v in params.items()}
        adam_step(state, params, zero)
        for name, p in params.items():
            if name.endswith((".b", ".a", ".gb", ".hb")):
                np.testing.assert_array_equal(p, before[name])
            else:
                assert np.all(np.abs(p) <= np.abs(before[name]) + 1e-18)
                changed = before[name] != 0
                assert np.all(p[changed] != before[name][changed])

    def test_adam_matches_reference_formula(self):
        """One parameter, two steps, hand-computed Adam recursion."""
        p = {"x.w": np.array([1.0])}
        cfg = OptimizerConfig(total_steps=100, peak_lr=1e-2, warmup_frac=0.0,
                              weight_decay=0.0)
        state = init_optimizer(p, cfg)
        g1 = np.array([0.3])
        adam_step(state, p, {"x.w": g1})
        m = 0.1 * 0.3
        v = 0.001 * 0.09
        expect = 1.0 - 1e-2 * (m / 0.1) / (np.sqrt(v / 0.001) + 1e-8)
        np.testing.assert_allclose(p["x.w"], expect, rtol=1e-12)

    def test_update_invariant_to_batch_permutation(self):
        rng = np.random.default_rng(21)
        cfg = ScoreNetConfig(dim_x=2, hidden=(6,), n_pairs=3, embed_dim=4)
        x_t = rng.normal(size=(8, 2))
        z = rng.normal(size=(8, 2))
        sig = rng.uniform(0.1, 1.0, size=8)
        perm = rng.permutation(8)
        grads = []
        for order in (np.arange(8), perm):
            net = ScoreNet(cfg, np.random.default_rng(22))
            randomize(net, np.random.default_rng(23))
            s = net.forward(x_t[order], None, sig[order], train=True)
            g = net.backward(sig[order, None] * (sig[order, None] * s + z[order]) / 8)
            grads.append(g)
        for name in grads[0]:
            np.testing.assert_allclose(grads[0][name], grads[1][name], rtol=1e-10, atol=1e-14)


class TestTraining:
    def test_loss_trace_decreases(self):
        """Smoothed DSM loss at the 90% checkpoint is below the 10% one."""
        from scorewave import GmmPrior

        prior = GmmPrior(weights=[1.0], means=[0.5], variances=[0.04])
        net = ScoreNet(ScoreNetConfig(dim_x=1, hidden=(24, 24), n_pairs=8, embed_dim=24),
                       np.random.default_rng(24))
        trace = train(net, prior, NoiseSchedule(), OptimizerConfig(total_steps=800, peak_lr=2e-3),
                      n_iters=800, batch_size=32, rng=np.random.default_rng(25))
        assert trace.shape == (800,)
        smooth = np.convolve(trace, np.ones(100) / 100, mode="valid")
        assert smooth[int(0.9 * smooth.size)] < smooth[int(0.1 * smooth.size)]

    def test_training_is_deterministic(self):
        from scorewave import GmmPrior

        prior = GmmPrior(weights=[1.0], means=[0.0], variances=[1.0])
        cfg = ScoreNetConfig(dim_x=1, hidden=(8,), n_pairs=4, embed_dim=8)
        nets = []
        for _ in range(2):
            net = ScoreNet(cfg, np.random.default_rng(26))
            train(net, prior, NoiseSchedule(), OptimizerConfig(total_steps=50),
                  n_iters=50, batch_size=16, rng=np.random.default_rng(27))
            nets.append(net)
        for name, p in nets[0].parameters().items():
            np.testing.assert_array_equal(p, nets[1].parameters()[name])

    def test_nan_loss_aborts_with_iteration(self):
        from scorewave import GmmPrior

        prior = GmmPrior(weights=[1.0], means=[0.0], variances=[1.0])
        net = ScoreNet(ScoreNetConfig(dim_x=1, hidden=(4,), n_pairs=2, embed_dim=3),
                       np.random.default_rng(28))
        net.parameters()["mlp.out.w"][...] = np.nan
        with pytest.raises(TrainingError, match="iteration 0"):
            train(net, prior, NoiseSchedule(), OptimizerConfig(total_steps=10),
                  n_iters=10, batch_size=4, rng=np.random.default_rng(29))

    def test_rejects_bad_data_argument(self):
        net = ScoreNet(ScoreNetConfig(dim_x=1, hidden=(4,)), np.random.default_rng(30))
        with pytest.raises(ConfigError):
            train(net, object(), NoiseSchedule(), OptimizerConfig(total_steps=10),
                  n_iters=10, batch_size=4, rng=np.random.default_rng(31))


class TestCheckpoint:
    def test_roundtrip_bitexact(self, tmp_path):
        net = ScoreNet(ScoreNetConfig(dim_x=2, dim_c=1, hidden=(6, 5), n_pairs=4, embed_dim=7),
                       np.random.default_rng(32))
        randomize(net, np.random.default_rng(33))
        state = init_optimizer(net.parameters(), OptimizerConfig(total_steps=500))
        state.step = 123
        for k in state.m:
            state.m[k] += 0.1
            state.v[k] += 0.2
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net, state)
        net2, state2 = load_checkpoint(path)
        np.testing.assert_array_equal(net2.embedding.frequencies, net.embedding.frequencies)
        for name, p in net.parameters().items():
            np.testing.assert_array_equal(net2.parameters()[name], p)
        assert state2.step == 123
        for k in state.m:
            np.testing.assert_array_equal(state2.m[k], state.m[k])
            np.testing.assert_array_equal(state2.v[k], state.v[k])

    def test_resume_equals_uninterrupted(self, tmp_path):
        """Train 60 iters straight vs 30 + checkpoint + restore + 30 with the
        same generator: identical parameters."""
        from scorewave import GmmPrior

        prior = GmmPrior(weights=[1.0], means=[0.0], variances=[0.25])
        cfg = ScoreNetConfig(dim_x=1, hidden=(6,), n_pairs=3, embed_dim=5)
        sched = NoiseSchedule()
        ocfg = OptimizerConfig(total_steps=60)

        net_a = ScoreNet(cfg, np.random.default_rng(34))
        train(net_a, prior, sched, ocfg, n_iters=60, batch_size=8, rng=np.random.default_rng(35))

        net_b = ScoreNet(cfg, np.random.default_rng(34))
        rng = np.random.default_rng(35)
        train(net_b, prior, sched, ocfg, n_iters=30, batch_size=8, rng=rng)
        path = tmp_path / "resume.ckpt"
        save_checkpoint(path, net_b, net_b.opt_state)
        net_c, state_c = load_checkpoint(path)
        train(net_c, prior, sched, ocfg, n_iters=30, batch_size=8, rng=rng, opt_state=state_c)

        for name, p in net_a.parameters().items():
            np.testing.assert_array_equal(net_c.parameters()[name], p)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
        with pytest.raises(ConfigError):
            load_checkpoint(path)
