"""Layers, losses, optimizer, networks, checkpoints and the training loop."""

import numpy as np
import pytest

from uvdrape.config import TEMPLATES
from uvdrape.errors import (
    CheckpointError,
    FormatVersionError,
    MapMismatchError,
    NetShapeError,
    SemanticError,
    StatsMismatchError,
)
from uvdrape.maps.norm import NormStats
from uvdrape.maps.uvmap import Semantic, UVMap
from uvdrape.net.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from uvdrape.net.discriminator import DiscriminatorNet
from uvdrape.net.generator import GeneratorNet, split_heads, stack_heads
from uvdrape.net.gradcheck import numeric_gradient, projection, relative_error
from uvdrape.net.infer import Predictor, infer, offsets_from_output, window_array
from uvdrape.net.layers import (
    Activation,
    BatchNorm2d,
    Block,
    Conv2d,
    Module,
    batchnorm_backward,
    batchnorm_forward,
    conv_backward,
    conv_forward,
    leaky_relu,
    leaky_relu_backward,
    tanh,
    tanh_backward,
    tconv_backward,
    tconv_forward,
)
from uvdrape.net.losses import adversarial_loss, bce_with_logits, generator_loss, masked_l1
from uvdrape.net.optim import Adam
from uvdrape.net.train import LOG_COLUMNS, GanTrainer, TrainConfig, train_arrays
from uvdrape.tracking import read_log

TOL = 1e-6
SMALL = dict(base_channels=4)


def scalar(w, y):
    return float(np.sum(w * y))


# --- layer gradients ---------------------------------------------------------


def test_conv_gradients(rng):
    x = rng.normal(size=(2, 3, 6, 6))
    w = rng.normal(size=(4, 3, 4, 4))
    b = rng.normal(size=4)
    proj = projection(conv_forward(x, w, b, 2, 1), seed=1)
    dx, dw, db = conv_backward(proj, x, w, 2, 1)

    def f():
        return scalar(proj, conv_forward(x, w, b, 2, 1))

    assert relative_error(dx, numeric_gradient(f, x)) < TOL
    assert relative_error(dw, numeric_gradient(f, w)) < TOL
    assert relative_error(db, numeric_gradient(f, b)) < TOL


def test_conv_output_shape(rng):
    y = conv_forward(rng.normal(size=(1, 2, 8, 8)), rng.normal(size=(5, 2, 4, 4)), np.zeros(5), 2, 1)
    assert y.shape == (1, 5, 4, 4)


def test_transposed_conv_gradients(rng):
    x = rng.normal(size=(2, 3, 3, 3))
    w = rng.normal(size=(3, 4, 4, 4))
    b = rng.normal(size=4)
    y = tconv_forward(x, w, b, 2, 1)
    assert y.shape == (2, 4, 6, 6)
    proj = projection(y, seed=2)
    dx, dw, db = tconv_backward(proj, x, w, 2, 1)

    def f():
        return scalar(proj, tconv_forward(x, w, b, 2, 1))

    assert relative_error(dx, numeric_gradient(f, x)) < TOL
    assert relative_error(dw, numeric_gradient(f, w)) < TOL
    assert relative_error(db, numeric_gradient(f, b)) < TOL


def test_batchnorm_gradients(rng):
    x = rng.normal(size=(4, 3, 2, 2))
    gamma = rng.uniform(0.5, 1.5, size=3)
    beta = rng.normal(size=3)
    mean, var = np.zeros(3), np.ones(3)
    y, cache, _, _ = batchnorm_forward(x, gamma, beta, mean, var, True)
    proj = projection(y, seed=3)
    dx, dgamma, dbeta = batchnorm_backward(proj, cache, True)

    def f():
        return scalar(proj, batchnorm_forward(x, gamma, beta, mean, var, True)[0])

    assert relative_error(dx, numeric_gradient(f, x)) < 1e-5
    assert relative_error(dgamma, numeric_gradient(f, gamma)) < 1e-5
    assert relative_error(dbeta, numeric_gradient(f, beta)) < 1e-5


def test_batchnorm_training_output_is_standardized(rng):
    x = rng.normal(3.0, 2.0, size=(8, 2, 4, 4))
    y, _, mu, _ = batchnorm_forward(x, np.ones(2), np.zeros(2), np.zeros(2), np.ones(2), True)
    np.testing.assert_allclose(y.mean(axis=(0, 2, 3)), 0.0, atol=1e-9)
    np.testing.assert_allclose(y.std(axis=(0, 2, 3)), 1.0, atol=1e-3)
    np.testing.assert_allclose(mu, x.mean(axis=(0, 2, 3)))


def test_held_stats_keep_running_buffers(rng):
    bn = BatchNorm2d(3)
    x = rng.normal(2.0, 3.0, size=(4, 3, 4, 4))
    bn.hold_stats()
    y = bn.forward(x)
    np.testing.assert_allclose(bn.buffers["running_mean"], 0.0)
    np.testing.assert_allclose(bn.buffers["running_var"], 1.0)
    np.testing.assert_allclose(y.mean(axis=(0, 2, 3)), 0.0, atol=1e-5)
    bn.hold_stats(False)
    bn.forward(x)
    assert np.all(bn.buffers["running_mean"] > 0.0)


def test_activation_gradients(rng):
    # keep samples away from the leaky ReLU kink
    x = rng.normal(size=(2, 3, 4, 4))
    x = np.sign(x) * (np.abs(x) + 0.1)
    proj = projection(x, seed=4)
    assert relative_error(leaky_relu_backward(proj, x), numeric_gradient(lambda: scalar(proj, leaky_relu(x)), x)) < TOL
    y = tanh(x)
    assert relative_error(tanh_backward(proj, y), numeric_gradient(lambda: scalar(proj, tanh(x)), x)) < TOL


def test_leaky_slope():
    np.testing.assert_allclose(leaky_relu(np.array([-1.0, 2.0])), [-0.2, 2.0])


def test_unknown_activation():
    with pytest.raises(ValueError):
        Activation("gelu")


def test_block_weight_gradient(rng):
    conv = Conv2d(3, 4, rng)
    block = Block(conv, BatchNorm2d(4), Activation("tanh")).astype(np.float64)
    x = rng.normal(size=(3, 3, 8, 8))
    weight = conv.params["weight"]
    block.zero_grad()
    y = block.forward(x)
    proj = projection(y, seed=5)
    block.backward(proj)
    analytic = conv.grads["weight"].copy()
    numeric = numeric_gradient(lambda: scalar(proj, block.forward(x)), weight)
    assert relative_error(analytic, numeric) < 1e-5


def test_module_state_round_trip(rng):
    a = Block(Conv2d(2, 3, rng), BatchNorm2d(3))
    b = Block(Conv2d(2, 3, np.random.default_rng(99)), BatchNorm2d(3))
    b.load_state(a.state())
    for name, value in a.state().items():
        np.testing.assert_array_equal(b.state()[name], value)
    with pytest.raises(NetShapeError):
        b.load_state({"0.weight": np.zeros(1)})


# --- losses ------------------------------------------------------------------


def test_bce_at_zero_logits():
    loss, grad = bce_with_logits(np.zeros(4), np.ones(4))
    assert loss == pytest.approx(np.log(2.0))
    np.testing.assert_allclose(grad, -0.5 / 4)


def test_bce_is_stable_for_large_logits():
    loss, grad = bce_with_logits(np.array([1000.0, -1000.0]), np.array([1.0, 0.0]))
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(grad))


def test_bce_gradient(rng):
    z = rng.normal(size=(2, 1, 3, 3))
    t = rng.uniform(size=z.shape)
    _, grad = bce_with_logits(z, t)
    assert relative_error(grad, numeric_gradient(lambda: bce_with_logits(z, t)[0], z)) < TOL


def test_adversarial_loss_averages_real_and_fake():
    zeros = np.zeros((1, 1, 2, 2))
    loss, g_fake, g_real = adversarial_loss(zeros, zeros, 0.0, 1.0)
    assert loss == pytest.approx(np.log(2.0))
    np.testing.assert_allclose(g_fake, 0.0625)
    np.testing.assert_allclose(g_real, -0.0625)
    with pytest.raises(NetShapeError):
        adversarial_loss(zeros, np.zeros((1, 1, 3, 3)), 0.0, 1.0)


def test_masked_l1_per_template():
    y_hat = np.zeros((1, 9, 2, 2))
    y = np.ones((1, 9, 2, 2))
    masks = np.zeros((1, 3, 2, 2), dtype=bool)
    masks[0, 0] = True
    masks[0, 1, 0, 0] = True
    l1, per_template, grad = masked_l1(y_hat, y, masks)
    assert l1 == pytest.approx(1.0)
    assert per_template == {"tops": 1.0, "bottoms": 1.0, "dress": 0.0}
    # 15 valid channel values
    assert grad[0, 0, 0, 0] == pytest.approx(-1.0 / 15)
    assert np.all(grad[0, 6:] == 0)


def test_masked_l1_needs_valid_pixels():
    with pytest.raises(ValueError):
        masked_l1(np.zeros((1, 9, 2, 2)), np.ones((1, 9, 2, 2)), np.zeros((1, 3, 2, 2), dtype=bool))


def test_generator_loss_combines_terms():
    masks = np.ones((1, 3, 2, 2), dtype=bool)
    gl = generator_loss(np.zeros((1, 1, 1, 1)), np.zeros((1, 9, 2, 2)), np.full((1, 9, 2, 2), 0.5), masks, 100.0)
    assert gl.adversarial == pytest.approx(np.log(2.0))
    assert gl.l1 == pytest.approx(0.5)
    assert gl.total == pytest.approx(np.log(2.0) + 50.0)


def test_adversarial_loss_gradients(rng):
    z_fake = rng.normal(size=(2, 1, 3, 3))
    z_real = rng.normal(size=(2, 1, 3, 3))
    t_fake = rng.uniform(0.0, 0.3, size=(2, 1, 1, 1))
    t_real = rng.uniform(0.7, 1.0, size=(2, 1, 1, 1))
    _, g_fake, g_real = adversarial_loss(z_fake, z_real, t_fake, t_real)

    def f():
        return adversarial_loss(z_fake, z_real, t_fake, t_real)[0]

    assert relative_error(g_fake, numeric_gradient(f, z_fake)) < TOL
    assert relative_error(g_real, numeric_gradient(f, z_real)) < TOL


def test_generator_loss_gradients(rng):
    logits = rng.normal(size=(2, 1, 2, 2))
    y = rng.uniform(-0.5, 0.5, size=(2, 9, 4, 4))
    # keep every difference away from the kink of |.|
    y_hat = y + rng.choice([-1.0, 1.0], size=y.shape) * rng.uniform(0.05, 0.5, size=y.shape)
    masks = rng.uniform(size=(2, 3, 4, 4)) < 0.7
    gl = generator_loss(logits, y_hat, y, masks, 100.0)

    def f():
        return generator_loss(logits, y_hat, y, masks, 100.0).total

    assert relative_error(gl.grad_logits, numeric_gradient(f, logits)) < TOL
    assert relative_error(gl.grad_output, numeric_gradient(f, y_hat)) < TOL
    assert np.all(gl.grad_output[~np.repeat(masks, 3, axis=1)] == 0)


@pytest.mark.parametrize("lambda_l1", [0.0, 1.0, 100.0])
def test_generator_loss_decomposes(rng, lambda_l1):
    logits = rng.normal(size=(2, 1, 2, 2))
    y_hat = rng.uniform(-1, 1, size=(2, 9, 4, 4))
    y = rng.uniform(-1, 1, size=(2, 9, 4, 4))
    masks = rng.uniform(size=(2, 3, 4, 4)) < 0.5
    gl = generator_loss(logits, y_hat, y, masks, lambda_l1)
    assert gl.total == gl.adversarial + lambda_l1 * gl.l1
    assert gl.adversarial == bce_with_logits(logits, np.ones(()))[0]
    assert gl.l1 == masked_l1(y_hat, y, masks)[0]


# --- optimizer ---------------------------------------------------------------


def one_param(value, grad):
    m = Module()
    m.params["w"] = np.array(value, dtype=np.float64)
    m.grads["w"] = np.array(grad, dtype=np.float64)
    return m


def test_adam_first_step_moves_by_lr():
    m = one_param([1.0, -1.0, 0.5], [3.0, -0.2, 10.0])
    Adam(m, lr=0.01).step()
    np.testing.assert_allclose(m.params["w"], [0.99, -0.99, 0.49], rtol=1e-6)


def test_adam_state_round_trip():
    m = one_param([1.0], [2.0])
    opt = Adam(m)
    opt.step()
    other = Adam(one_param([1.0], [2.0]))
    other.load_state(opt.state())
    assert other.t == 1
    np.testing.assert_array_equal(other.m["w"], opt.m["w"])


def test_adam_validates_hyperparameters():
    with pytest.raises(ValueError):
        Adam(one_param([1.0], [0.0]), lr=0.0)
    with pytest.raises(ValueError):
        Adam(one_param([1.0], [0.0]), betas=(1.0, 0.999))


# --- networks ----------------------------------------------------------------


def test_generator_heads(rng):
    net = GeneratorNet(**SMALL)
    x = rng.normal(size=(2, 18, 16, 16)).astype(np.float32)
    out = net.forward(x)
    assert tuple(out) == TEMPLATES
    for head in out.values():
        assert head.shape == (2, 3, 16, 16)
        assert np.all(np.abs(head) <= 1.0)
    dx = net.backward({t: np.ones_like(h) for t, h in out.items()})
    assert dx.shape == x.shape


def test_generator_checks_input():
    net = GeneratorNet(**SMALL)
    with pytest.raises(NetShapeError):
        net.forward(np.zeros((1, 18, 24, 24), dtype=np.float32))
    with pytest.raises(NetShapeError):
        net.forward(np.zeros((1, 12, 16, 16), dtype=np.float32))


def test_generator_is_seeded():
    a, b = GeneratorNet(seed=7, **SMALL), GeneratorNet(seed=7, **SMALL)
    for name, value in a.parameters().items():
        np.testing.assert_array_equal(b.parameters()[name], value)


def test_stack_and_split_heads(rng):
    heads = {t: rng.normal(size=(1, 3, 4, 4)) for t in TEMPLATES}
    stacked = stack_heads(heads)
    assert stacked.shape == (1, 9, 4, 4)
    for t, value in split_heads(stacked).items():
        np.testing.assert_array_equal(value, heads[t])


def test_discriminator_patch_grid(rng):
    net = DiscriminatorNet(**SMALL)
    cond = rng.normal(size=(2, 18, 32, 32)).astype(np.float32)
    target = rng.normal(size=(2, 9, 32, 32)).astype(np.float32)
    logits = net.forward(cond, target)
    assert logits.shape == (2, 1, 2, 2)
    assert net.backward(np.ones_like(logits)).shape == target.shape
    with pytest.raises(NetShapeError):
        net.forward(None, target)


def test_unconditional_discriminator(rng):
    net = DiscriminatorNet(conditional=False, **SMALL)
    logits = net.forward(None, rng.normal(size=(1, 9, 16, 16)).astype(np.float32))
    assert logits.shape == (1, 1, 1, 1)


# --- checkpoints -------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path, rng):
    gen = GeneratorNet(**SMALL)
    disc = DiscriminatorNet(**SMALL)
    opt = Adam(gen)
    path = save_checkpoint(tmp_path / "run" / "ckpt.pxn", gen, resolution=16, stats_hash="abc", epoch=3,
                           discriminator=disc, optimizers={"optG": opt})
    assert path.read_bytes()[:4] == MAGIC
    ckpt = load_checkpoint(path)
    assert ckpt.epoch == 3
    assert ckpt.stats_hash == "abc"
    assert ckpt.resolution == 16
    x = rng.normal(size=(1, 18, 16, 16)).astype(np.float32)
    restored = ckpt.build_generator()
    for t, head in gen.predict(x).items():
        np.testing.assert_array_equal(restored.predict(x)[t], head)
    assert ckpt.build_discriminator() is not None
    assert ckpt.restore_optimizer("optG", Adam(restored))
    assert not ckpt.restore_optimizer("optD", Adam(restored))


def test_checkpoint_bad_magic(tmp_path):
    path = save_checkpoint(tmp_path / "ckpt.pxn", GeneratorNet(**SMALL), resolution=16, stats_hash="")
    path.write_bytes(b"ZZZZ" + path.read_bytes()[4:])
    with pytest.raises(FormatVersionError):
        load_checkpoint(path)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.pxn")


# --- inference ---------------------------------------------------------------


def unit_stats():
    unit = (-np.ones(3), np.ones(3))
    entries = {"velocity": unit, "acceleration": unit}
    entries.update({f"offset/{t}": (np.full(3, -0.1), np.full(3, 0.3)) for t in TEMPLATES})
    return NormStats(entries)


def body_window(rng, size=16):
    mask = np.ones((size, size), dtype=bool)
    semantics = [Semantic.VELOCITY] * 3 + [Semantic.ACCELERATION] * 3
    return [UVMap.create(rng.uniform(-1, 1, size=(size, size, 3)), mask, s) for s in semantics]


def test_window_array_layout(rng):
    window = body_window(rng)
    x = window_array(window, unit_stats())
    assert x.shape == (1, 18, 16, 16)
    assert x.dtype == np.float32
    # unit stats leave values unchanged
    np.testing.assert_allclose(x[0, 15:18], window[5].channels_first(), atol=1e-6)


def test_window_array_checks_order(rng):
    window = body_window(rng)
    with pytest.raises(SemanticError):
        window_array(window[3:] + window[:3], unit_stats())
    with pytest.raises(ValueError):
        window_array(window[:5], unit_stats())


def test_zero_output_gives_mid_range_offsets():
    mask = np.zeros((4, 4), dtype=bool)
    mask[:2] = True
    offsets = offsets_from_output(np.zeros((3, 4, 4)), mask, unit_stats(), "dress")
    assert offsets.semantic == Semantic.OFFSET
    np.testing.assert_allclose(offsets.valid_values(), 0.1)
    np.testing.assert_array_equal(offsets.data[~mask], 0.0)


def test_infer_applies_template_masks(rng):
    masks = {t: np.ones((16, 16), dtype=bool) for t in TEMPLATES}
    masks["dress"][:8] = False
    offsets = infer(GeneratorNet(**SMALL), body_window(rng), unit_stats(), masks)
    assert offsets["dress"].valid_count == 128
    assert offsets["tops"].valid_count == 256
    masks["tops"] = np.ones((8, 8), dtype=bool)
    with pytest.raises(MapMismatchError):
        infer(GeneratorNet(**SMALL), body_window(rng), unit_stats(), masks)


def test_predictor(tmp_path, rng):
    stats = unit_stats()
    path = save_checkpoint(tmp_path / "ckpt.pxn", GeneratorNet(**SMALL), resolution=16, stats_hash=stats.digest())
    predictor = Predictor.load(path, stats, 16)
    masks = {t: np.ones((16, 16), dtype=bool) for t in TEMPLATES}
    offsets = predictor(body_window(rng), masks)
    assert set(offsets) == set(TEMPLATES)
    for m in offsets.values():
        assert m.semantic == Semantic.OFFSET
        assert np.all(m.valid_values() >= -0.1 - 1e-6)
        assert np.all(m.valid_values() <= 0.3 + 1e-6)
    with pytest.raises(NetShapeError):
        Predictor.load(path, stats, 32)


def test_predictor_rejects_other_stats(tmp_path):
    path = save_checkpoint(tmp_path / "ckpt.pxn", GeneratorNet(**SMALL), resolution=16,
                           stats_hash=unit_stats().digest())
    other = NormStats({"velocity": (-np.ones(3), 2 * np.ones(3))})
    with pytest.raises(StatsMismatchError):
        Predictor.load(path, other)


# --- training ----------------------------------------------------------------


def toy_arrays(count=4, size=16, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, size=(count, 18, size, size)).astype(np.float32)
    y = np.tanh(x[:, :9]).astype(np.float32)
    masks = np.ones((count, 3, size, size), dtype=bool)
    masks[:, 2, : size // 2] = False
    return x, y, masks


def test_training_is_deterministic():
    config = TrainConfig(epochs=2, batch_size=2, seed=3, **SMALL)
    x, y, masks = toy_arrays()
    first = train_arrays(x, y, masks, config)
    second = train_arrays(x, y, masks, config)
    assert len(first.history) == len(second.history) == 200
    assert [(e.loss_d, e.loss_g) for e in first.history] == [(e.loss_d, e.loss_g) for e in second.history]
    assert all(np.isfinite(e.loss_d) and np.isfinite(e.loss_g) for e in first.history)


def test_training_writes_log_and_checkpoint(tmp_path):
    config = TrainConfig(epochs=2, batch_size=2, **SMALL)
    x, y, masks = toy_arrays()
    result = train_arrays(x, y, masks, config, out_dir=tmp_path / "run", stats_hash="abc")
    rows = read_log(result.log_path)
    assert [int(r["epoch"]) for r in rows] == [1, 2]
    assert list(rows[0]) == list(LOG_COLUMNS)
    ckpt = load_checkpoint(result.checkpoint)
    assert ckpt.epoch == 2
    assert ckpt.stats_hash == "abc"


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(real_range=(0.9, 0.7))
    with pytest.raises(ValueError):
        TrainConfig(flip_fraction=0.5)
    assert TrainConfig.from_dict({"betas": [0.5, 0.9]}).betas == (0.5, 0.9)


def snapshot(module):
    return {name: value.copy() for name, value in module.state().items()}


def unchanged(module, before):
    return all(np.array_equal(value, before[name]) for name, value in module.state().items())


def test_networks_share_no_parameters():
    trainer = GanTrainer(TrainConfig(**SMALL))
    g_params = list(trainer.generator.parameters().values())
    d_params = list(trainer.discriminator.parameters().values())
    assert not {id(p) for p in g_params} & {id(p) for p in d_params}
    assert not any(np.shares_memory(a, b) for a in g_params for b in d_params)


def test_discriminator_step_leaves_generator_alone():
    trainer = GanTrainer(TrainConfig(batch_size=2, **SMALL))
    x, y, masks = toy_arrays(count=2)
    weight = np.repeat(masks, 3, axis=1)
    y_hat = stack_heads(trainer.generator.forward(x), TEMPLATES)
    g_before, d_before = snapshot(trainer.generator), snapshot(trainer.discriminator)
    loss_d = trainer.discriminator_step(x, y * weight, y_hat * weight, np.zeros(2, dtype=bool))
    assert np.isfinite(loss_d)
    assert unchanged(trainer.generator, g_before)
    assert not unchanged(trainer.discriminator, d_before)


def test_generator_step_leaves_discriminator_alone():
    trainer = GanTrainer(TrainConfig(batch_size=2, **SMALL))
    x, y, masks = toy_arrays(count=2)
    y_hat = stack_heads(trainer.generator.forward(x), TEMPLATES)
    g_before, d_before = snapshot(trainer.generator), snapshot(trainer.discriminator)
    gl = trainer.generator_step(x, y, y_hat, masks)
    assert gl.total == gl.adversarial + trainer.config.lambda_l1 * gl.l1
    # weights and running statistics
    assert unchanged(trainer.discriminator, d_before)
    assert all(np.all(g == 0) for g in trainer.discriminator.gradients().values())
    assert not unchanged(trainer.generator, g_before)
    # statistics are released again after the step
    trainer.discriminator.forward(x, y)
    assert not unchanged(trainer.discriminator, d_before)


def smooth_arrays(count=10, size=32, seed=0):
    rng = np.random.default_rng(seed)
    # constant over 8x8 blocks
    coarse = rng.uniform(-1, 1, size=(count, 18, size // 8, size // 8))
    x = np.kron(coarse, np.ones((1, 1, 8, 8))).astype(np.float32)
    mix = rng.normal(size=(9, 18)) / np.sqrt(18.0)
    y = (0.5 * np.tanh(np.einsum("oc,nchw->nohw", mix, x))).astype(np.float32)
    masks = np.ones((count, 3, size, size), dtype=bool)
    masks[:, 2, : size // 2] = False
    return x, y, masks


@pytest.mark.slow
def test_overfits_ten_samples():
    config = TrainConfig(epochs=200, batch_size=2, base_channels=16, seed=7)
    x, y, masks = smooth_arrays()
    first = train_arrays(x, y, masks, config)
    assert first.history[-1].l1_mean < 0.1 * first.history[0].l1_mean
    second = train_arrays(x, y, masks, config)
    assert len(first.history) == len(second.history) == 200
    for a, b in zip(first.history, second.history):
        assert a.loss_d == pytest.approx(b.loss_d, abs=1e-6)
        assert a.loss_g == pytest.approx(b.loss_g, abs=1e-6)
        assert a.l1_mean == pytest.approx(b.l1_mean, abs=1e-6)
