"""Training-step semantics: consolidation gating, degenerate configs, loop."""

import numpy as np
import pytest

from duca.datasets import synthetic_blobs, synthetic_shapes
from duca.errors import TrainingDivergenceError
from duca.nn import ArchitectureSpec, SGD, build_classifier, copy_parameters, cross_entropy
from duca.shape_filter import ShapeConfig, extract_shape
from duca.streams import build_sequential
from duca.training import (
    DerppConfig,
    DucaConfig,
    DucaTrainer,
    TrainConfig,
    create_trainer,
    train_stream,
)

ARCH = ArchitectureSpec("mlp", (1, 16, 16), width=24)


def _batch(rng, n=8, size=16):
    x = rng.random((n, 1, size, size), dtype=np.float32)
    y = rng.integers(0, 4, size=n)
    return x, y


def _duca_cfg(**kw):
    base = dict(lr=0.05, batch_size=8, epochs_per_task=1, buffer_capacity=16,
                smu_rate=0.5, smu_decay=0.9, align_wm=0.1, align_ibl=0.1,
                augment=False, shape=ShapeConfig(output_channels=1))
    base.update(kw)
    return DucaConfig(**base)


def _state_copy(clf):
    return [a.copy() for a in clf.state_arrays()]


def test_smu_rate_zero_freezes_semantic_memory():
    trainer = DucaTrainer(ARCH, 4, _duca_cfg(smu_rate=0.0), seed=0)
    before = _state_copy(trainer.sm)
    rng = np.random.default_rng(0)
    for _ in range(5):
        trainer.train_step(*_batch(rng))
    for a, b in zip(trainer.sm.state_arrays(), before):
        assert np.array_equal(a, b)


def test_smu_rate_one_decay_zero_tracks_working_model():
    trainer = DucaTrainer(ARCH, 4, _duca_cfg(smu_rate=1.0, smu_decay=0.0), seed=0)
    rng = np.random.default_rng(1)
    for _ in range(3):
        trainer.train_step(*_batch(rng))
        for a, b in zip(trainer.sm.state_arrays(), trainer.wm.state_arrays()):
            assert np.array_equal(a, b)


def test_smu_blend_count_is_binomial():
    trainer = DucaTrainer(ARCH, 4, _duca_cfg(smu_rate=0.3, buffer_capacity=0), seed=3)
    rng = np.random.default_rng(2)
    blends = 0
    last = _state_copy(trainer.sm)
    steps = 300
    for _ in range(steps):
        trainer.train_step(*_batch(rng))
        if not all(np.array_equal(a, b) for a, b in
                   zip(trainer.sm.state_arrays(), last)):
            blends += 1
            last = _state_copy(trainer.sm)
    mean = steps * 0.3
    sigma = np.sqrt(steps * 0.3 * 0.7)
    assert abs(blends - mean) < 4 * sigma


def test_sm_stays_inside_running_envelope():
    trainer = DucaTrainer(ARCH, 4, _duca_cfg(smu_rate=0.6), seed=4)
    rng = np.random.default_rng(3)
    lo = [a.copy() for a in trainer.sm.state_arrays()]
    hi = [a.copy() for a in trainer.sm.state_arrays()]
    for _ in range(10):
        trainer.train_step(*_batch(rng))
        for l, h, wm in zip(lo, hi, trainer.wm.state_arrays()):
            np.minimum(l, wm, out=l)
            np.maximum(h, wm, out=h)
        for l, h, sm in zip(lo, hi, trainer.sm.state_arrays()):
            eps = 4 * np.spacing(np.maximum(np.abs(l), np.abs(h)))
            assert (sm >= l - eps).all() and (sm <= h + eps).all()


def test_loss_decomposition_identity():
    cfg = _duca_cfg(align_wm=0.2, align_ibl=0.05)
    trainer = DucaTrainer(ARCH, 4, cfg, seed=5)
    rng = np.random.default_rng(4)
    for step in range(4):
        lb = trainer.train_step(*_batch(rng))
        ks_wm = lb.ks_wm or 0.0
        ks_ibl = lb.ks_ibl or 0.0
        assert lb.total_wm == pytest.approx(lb.sup_wm + 0.2 * (lb.biks + ks_wm), abs=1e-6)
        assert lb.total_ibl == pytest.approx(lb.sup_ibl + 0.05 * (lb.biks + ks_ibl), abs=1e-6)
        if step == 0:
            assert lb.ks_wm is None and lb.ks_ibl is None
        else:
            assert lb.ks_wm is not None


def test_degenerate_duca_matches_plain_ce_learners_bitwise():
    # no sharing, no buffer: the working model and the shape learner must
    # follow two independently trained cross-entropy networks step for step
    cfg = _duca_cfg(align_wm=0.0, align_ibl=0.0, buffer_capacity=0, lr=0.1)
    trainer = DucaTrainer(ARCH, 4, cfg, seed=6, dtype=np.float64)

    oracle_rgb = build_classifier(ARCH, 4, seed=1, dtype=np.float64)
    oracle_shape = build_classifier(ARCH, 4, seed=2, dtype=np.float64)
    copy_parameters(oracle_rgb, trainer.wm)
    copy_parameters(oracle_shape, trainer.ibl)
    opt_rgb = SGD(oracle_rgb.params(), cfg.lr)
    opt_shape = SGD(oracle_shape.params(), cfg.lr)

    rng = np.random.default_rng(5)
    for _ in range(5):
        x, y = _batch(rng)
        trainer.train_step(x, y)
        for net, opt, inp in ((oracle_rgb, opt_rgb, x),
                              (oracle_shape, opt_shape, extract_shape(x, cfg.shape))):
            net.zero_grad()
            logits, cache = net.forward_train(inp.astype(np.float64))
            _, dlogits = cross_entropy(logits, y)
            net.backward(cache, dlogits)
            opt.step()
        for a, b in zip(trainer.wm.state_arrays(), oracle_rgb.state_arrays()):
            assert np.array_equal(a, b)
        for a, b in zip(trainer.ibl.state_arrays(), oracle_shape.state_arrays()):
            assert np.array_equal(a, b)


def test_er_with_empty_buffer_equals_sgd_and_derpp():
    rng = np.random.default_rng(6)
    batches = [_batch(rng) for _ in range(4)]
    params = {}
    for method, cfg in (
        ("sgd", TrainConfig(lr=0.1, batch_size=8, epochs_per_task=1,
                            buffer_capacity=0, augment=False)),
        ("er", TrainConfig(lr=0.1, batch_size=8, epochs_per_task=1,
                           buffer_capacity=0, augment=False)),
        ("derpp", DerppConfig(lr=0.1, batch_size=8, epochs_per_task=1,
                              buffer_capacity=0, augment=False, alpha=0.0, beta=0.0)),
    ):
        trainer = create_trainer(method, ARCH, 4, cfg, seed=7, dtype=np.float64)
        for x, y in batches:
            trainer.train_step(x, y)
        params[method] = _state_copy(trainer.net)
    for a, b, c in zip(params["sgd"], params["er"], params["derpp"]):
        assert np.array_equal(a, b)
        assert np.array_equal(a, c)


def test_derpp_stores_logits_in_aux():
    cfg = DerppConfig(lr=0.05, batch_size=8, epochs_per_task=1,
                      buffer_capacity=32, augment=False)
    trainer = create_trainer("derpp", ARCH, 4, cfg, seed=8)
    rng = np.random.default_rng(7)
    trainer.train_step(*_batch(rng))
    assert all(e.aux is not None and e.aux.shape == (4,) for e in trainer.buffer.entries)
    # second step consumes the stored logits without error
    trainer.train_step(*_batch(rng))


def test_er_buffer_stores_raw_not_augmented():
    cfg = TrainConfig(lr=0.05, batch_size=8, epochs_per_task=1,
                      buffer_capacity=64, augment=True, crop_pad=2)
    trainer = create_trainer("er", ARCH, 4, cfg, seed=9)
    rng = np.random.default_rng(8)
    x, y = _batch(rng)
    trainer.observe(x, y)
    stored = np.stack([e.image for e in trainer.buffer.entries])
    assert np.array_equal(np.sort(stored.ravel()), np.sort(x.ravel()))


def test_divergence_raises_with_diagnostics():
    cfg = _duca_cfg(lr=1e18, buffer_capacity=0)
    trainer = DucaTrainer(ARCH, 4, cfg, seed=10)
    rng = np.random.default_rng(9)
    with pytest.raises(TrainingDivergenceError) as exc_info:
        for _ in range(10):
            trainer.train_step(*_batch(rng))
    assert "breakdown" in exc_info.value.diagnostics


@pytest.fixture(scope="module")
def tiny_stream():
    data = synthetic_shapes(num_classes=4, size=16, channels=1,
                            train_per_class=24, test_per_class=8, seed=0)
    return build_sequential(data, 2)


def test_train_stream_matrix_shape_and_determinism(tiny_stream):
    def run():
        cfg = _duca_cfg(epochs_per_task=1, batch_size=16)
        trainer = DucaTrainer(ArchitectureSpec("mlp", (1, 16, 16), width=24), 4, cfg, seed=11)
        return train_stream(trainer, tiny_stream, seed=11)

    r1, r2 = run(), run()
    assert r1.matrix.shape == (2, 2)
    assert r1.task_il_matrix.shape == (2, 2)
    assert np.array_equal(r1.matrix, r2.matrix)
    assert np.array_equal(r1.log.probs, r2.log.probs)
    assert len(r1.telemetry) == 2
    assert (r1.task_il_matrix >= r1.matrix - 1e-9).all()


def test_joint_training_gives_single_row(tiny_stream):
    cfg = TrainConfig(lr=0.05, batch_size=16, epochs_per_task=1,
                      buffer_capacity=0, augment=False)
    trainer = create_trainer("joint", ArchitectureSpec("mlp", (1, 16, 16), width=24),
                             4, cfg, seed=12)
    result = train_stream(trainer, tiny_stream, seed=12, joint=True)
    assert result.matrix.shape == (1, 2)


def test_hooks_receive_epoch_telemetry(tiny_stream):
    events = []

    class Hooks:
        def on_epoch(self, task, epoch, means):
            events.append(("epoch", task, epoch, sorted(means)))

        def on_task(self, task, row, task_row):
            events.append(("task", task, row.shape))

    cfg = _duca_cfg(epochs_per_task=2, batch_size=16)
    trainer = DucaTrainer(ArchitectureSpec("mlp", (1, 16, 16), width=24), 4, cfg, seed=13)
    train_stream(trainer, tiny_stream, seed=13, hooks=Hooks())
    kinds = [e[0] for e in events]
    assert kinds.count("epoch") == 4
    assert kinds.count("task") == 2
    assert any("sup_wm" in e[3] for e in events if e[0] == "epoch")
