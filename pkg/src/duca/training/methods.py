"""Per-step training logic for every method sharing the stream harness.

Each trainer exposes ``observe(x_raw, y)`` (augment + one optimizer step),
``eval_model()`` (the network used for inference) and a replay buffer where
applicable. The three-network method keeps a working model trained on RGB,
a shape learner trained on edge-magnitude images, and a slow semantic
memory updated only through Bernoulli-gated EMA blends of the working
model; inference uses the semantic memory.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import TrainingDivergenceError
from ..nn import SGD, blend_parameters, build_classifier, copy_parameters, cross_entropy, mse
from ..replay import ReservoirBuffer
from ..shape_filter import extract_shape
from .config import DerppConfig, DucaConfig, TrainConfig


def augment_batch(x, rng, pad=4, flip=True):
    """Random zero-padded crop plus horizontal flip, per sample."""
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    xp[:, :, pad:pad + h, pad:pad + w] = x
    ys = rng.integers(0, 2 * pad + 1, size=n)
    xs = rng.integers(0, 2 * pad + 1, size=n)
    flips = rng.random(n) < 0.5 if flip else np.zeros(n, dtype=bool)
    out = np.empty_like(x)
    for i in range(n):
        crop = xp[i, :, ys[i]:ys[i] + h, xs[i]:xs[i] + w]
        out[i] = crop[:, :, ::-1] if flips[i] else crop
    return out


@dataclass
class LossBreakdown:
    """Per-step loss terms; sharing terms are None before the buffer fills."""

    sup_wm: float
    sup_ibl: Optional[float]
    biks: Optional[float]
    ks_wm: Optional[float]
    ks_ibl: Optional[float]
    total_wm: float
    total_ibl: Optional[float]

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _check_finite(trainer, breakdown, context):
    vals = [v for v in breakdown.as_dict().values()]
    if not np.isfinite(vals).all():
        raise TrainingDivergenceError(
            f"non-finite loss during {context}",
            diagnostics={"breakdown": breakdown.as_dict(), "method": trainer.method},
        )


class _TrainerBase:
    """Shared plumbing: rng streams, augmentation, the optimizer factory."""

    def __init__(self, arch_spec, num_classes, config, seed, dtype=np.float32):
        self.config = config
        self.num_classes = num_classes
        ss = np.random.SeedSequence([seed, 0xD0CA])
        init_wm, init_ibl, smu, buf, aug = ss.spawn(5)
        self._seeds = {"wm": init_wm, "ibl": init_ibl}
        self.net = build_classifier(arch_spec, num_classes, init_wm, dtype)
        self.opt = SGD(self.net.params(), config.lr, config.momentum, config.weight_decay)
        self.smu_rng = np.random.default_rng(smu)
        self.aug_rng = np.random.default_rng(aug)
        self.buffer = ReservoirBuffer(config.buffer_capacity, seed=buf)
        self._init_ibl_seed = init_ibl
        self._dtype = dtype
        self._arch_spec = arch_spec

    def _augment(self, x):
        if not self.config.augment:
            return x
        return augment_batch(x, self.aug_rng, pad=self.config.crop_pad)

    def observe(self, x_raw, y):
        return self.train_step(self._augment(x_raw), y, x_raw)

    def eval_model(self):
        return self.net

    def start_task(self, task_index):
        pass


class SgdTrainer(_TrainerBase):
    """Plain cross-entropy on the current batch; no replay."""

    method = "sgd"

    def train_step(self, x_c, y_c, x_raw=None):
        net = self.net
        net.zero_grad()
        logits, cache = net.forward_train(x_c)
        sup, dlogits = cross_entropy(logits, y_c)
        net.backward(cache, dlogits)
        self.opt.step()
        breakdown = LossBreakdown(sup, None, None, None, None, sup, None)
        _check_finite(self, breakdown, "sgd step")
        return breakdown


class JointTrainer(SgdTrainer):
    """Same step as sgd; the harness feeds it the pooled stream."""

    method = "joint"


class ErTrainer(_TrainerBase):
    """Replay baseline: cross-entropy on current plus one buffer batch."""

    method = "er"

    def train_step(self, x_c, y_c, x_raw=None):
        net, cfg = self.net, self.config
        net.zero_grad()
        logits, cache = net.forward_train(x_c)
        sup, dlogits = cross_entropy(logits, y_c)
        net.backward(cache, dlogits)
        if not self.buffer.is_empty():
            xb, yb, _ = self.buffer.sample_arrays(cfg.batch_size)
            xb = self._augment(xb)
            logits_b, cache_b = net.forward_train(xb)
            sup_b, dlogits_b = cross_entropy(logits_b, yb)
            sup += sup_b
            net.backward(cache_b, dlogits_b)
        self.opt.step()
        if x_raw is None:
            x_raw = x_c
        for i in range(x_raw.shape[0]):
            self.buffer.insert(x_raw[i], y_c[i])
        breakdown = LossBreakdown(sup, None, None, None, None, sup, None)
        _check_finite(self, breakdown, "er step")
        return breakdown


class DerppTrainer(_TrainerBase):
    """Replay plus stored-logit consistency on a second buffer pass."""

    method = "derpp"

    def __init__(self, arch_spec, num_classes, config, seed, dtype=np.float32):
        if not isinstance(config, DerppConfig):
            raise TypeError("DerppTrainer requires a DerppConfig")
        super().__init__(arch_spec, num_classes, config, seed, dtype)

    def train_step(self, x_c, y_c, x_raw=None):
        net, cfg = self.net, self.config
        net.zero_grad()
        logits, cache = net.forward_train(x_c)
        sup, dlogits = cross_entropy(logits, y_c)
        net.backward(cache, dlogits)
        aux_mse = None
        has_buf = not self.buffer.is_empty()
        if has_buf and cfg.alpha != 0:
            xb, _, aux = self.buffer.sample_arrays(cfg.batch_size)
            xb = self._augment(xb)
            stored = np.stack(aux).astype(logits.dtype)
            logits_b, cache_b = net.forward_train(xb)
            aux_mse, dmse = mse(logits_b, stored)
            net.backward(cache_b, cfg.alpha * dmse)
        sup_b = None
        if has_buf and cfg.beta != 0:
            xb2, yb2, _ = self.buffer.sample_arrays(cfg.batch_size)
            xb2 = self._augment(xb2)
            logits_b2, cache_b2 = net.forward_train(xb2)
            sup_b, dce = cross_entropy(logits_b2, yb2)
            net.backward(cache_b2, cfg.beta * dce)
        self.opt.step()
        if x_raw is None:
            x_raw = x_c
        for i in range(x_raw.shape[0]):
            self.buffer.insert(x_raw[i], y_c[i], aux=logits[i].copy())
        total = sup + cfg.alpha * (aux_mse or 0.0) + cfg.beta * (sup_b or 0.0)
        breakdown = LossBreakdown(sup + (sup_b or 0.0), None, None, None, None, total, None)
        _check_finite(self, breakdown, "derpp step")
        return breakdown


def shared_losses(wm, ibl, sm, cfg, x_c, y_c, xb=None, yb=None, backward=False):
    """Supervised + knowledge-sharing losses of the three-network method.

    The working model sees RGB, the shape learner sees the edge transform
    of the same views, and the slow memory acts as a gradient-free teacher
    on the buffer batch. The cross-network consistency term is computed
    once over current-plus-buffer logits; its gradient reaches the working
    model scaled by ``align_wm`` and the shape learner scaled by
    ``align_ibl``. With ``backward=True`` parameter gradients accumulate
    into both trained networks.
    """
    lam, gam = cfg.align_wm, cfg.align_ibl
    n_c = x_c.shape[0]

    x_cs = extract_shape(x_c, cfg.shape)
    wm_logits_c, wm_cache_c = wm.forward_train(x_c)
    ibl_logits_c, ibl_cache_c = ibl.forward_train(x_cs)
    sup_wm, d_wm_c = cross_entropy(wm_logits_c, y_c)
    sup_ibl, d_ibl_c = cross_entropy(ibl_logits_c, y_c)

    has_buf = xb is not None
    ks_wm = ks_ibl = None
    if has_buf:
        x_bs = extract_shape(xb, cfg.shape)
        wm_logits_b, wm_cache_b = wm.forward_train(xb)
        ibl_logits_b, ibl_cache_b = ibl.forward_train(x_bs)
        sm_logits_b = sm.logits(xb)

        ce_wm_b, d_wm_b = cross_entropy(wm_logits_b, yb)
        ce_ibl_b, d_ibl_b = cross_entropy(ibl_logits_b, yb)
        sup_wm += ce_wm_b
        sup_ibl += ce_ibl_b

        val, g = mse(wm_logits_b, sm_logits_b)
        ks_wm = val
        if lam != 0:
            d_wm_b = d_wm_b + lam * g
        val, g = mse(ibl_logits_b, sm_logits_b)
        ks_ibl = val
        if gam != 0:
            d_ibl_b = d_ibl_b + gam * g

        wm_all = np.concatenate([wm_logits_c, wm_logits_b])
        ibl_all = np.concatenate([ibl_logits_c, ibl_logits_b])
        biks, g_all = mse(wm_all, ibl_all)
        if lam != 0:
            d_wm_c = d_wm_c + lam * g_all[:n_c]
            d_wm_b = d_wm_b + lam * g_all[n_c:]
        if gam != 0:
            d_ibl_c = d_ibl_c - gam * g_all[:n_c]
            d_ibl_b = d_ibl_b - gam * g_all[n_c:]
    else:
        biks, g = mse(wm_logits_c, ibl_logits_c)
        if lam != 0:
            d_wm_c = d_wm_c + lam * g
        if gam != 0:
            d_ibl_c = d_ibl_c - gam * g

    if backward:
        wm.backward(wm_cache_c, d_wm_c)
        if has_buf:
            wm.backward(wm_cache_b, d_wm_b)
        ibl.backward(ibl_cache_c, d_ibl_c)
        if has_buf:
            ibl.backward(ibl_cache_b, d_ibl_b)

    total_wm = sup_wm + lam * (biks + (ks_wm or 0.0))
    total_ibl = sup_ibl + gam * (biks + (ks_ibl or 0.0))
    return LossBreakdown(sup_wm, sup_ibl, biks, ks_wm, ks_ibl, total_wm, total_ibl)


class DucaTrainer(_TrainerBase):
    """Working model + shape learner + EMA semantic memory."""

    method = "duca"

    def __init__(self, arch_spec, num_classes, config, seed, dtype=np.float32):
        if not isinstance(config, DucaConfig):
            raise TypeError("DucaTrainer requires a DucaConfig")
        super().__init__(arch_spec, num_classes, config, seed, dtype)
        self.wm = self.net
        self.ibl = build_classifier(arch_spec, num_classes, self._init_ibl_seed, dtype)
        self.sm = build_classifier(arch_spec, num_classes, self._seeds["wm"], dtype)
        copy_parameters(self.sm, self.wm)
        self.opt_wm = self.opt
        self.opt_ibl = SGD(self.ibl.params(), config.lr, config.momentum, config.weight_decay)

    def eval_model(self):
        # consolidated knowledge lives in the slow memory
        return self.sm

    def train_step(self, x_c, y_c, x_raw=None):
        cfg = self.config
        if self.buffer.is_empty():
            xb = yb = None
        else:
            xb, yb, _ = self.buffer.sample_arrays(cfg.batch_size)
            xb = self._augment(xb)

        self.wm.zero_grad()
        self.ibl.zero_grad()
        breakdown = shared_losses(self.wm, self.ibl, self.sm, cfg, x_c, y_c,
                                  xb, yb, backward=True)
        self.opt_wm.step()
        self.opt_ibl.step()

        # Bernoulli-gated EMA consolidation, one draw per step
        if self.smu_rng.random() < cfg.smu_rate:
            blend_parameters(self.sm, self.wm, cfg.smu_decay)

        if x_raw is None:
            x_raw = x_c
        for i in range(x_raw.shape[0]):
            self.buffer.insert(x_raw[i], y_c[i])

        _check_finite(self, breakdown, "duca step")
        return breakdown


METHODS = {
    "duca": (DucaTrainer, DucaConfig),
    "er": (ErTrainer, TrainConfig),
    "sgd": (SgdTrainer, TrainConfig),
    "joint": (JointTrainer, TrainConfig),
    "derpp": (DerppTrainer, DerppConfig),
}


def create_trainer(method, arch_spec, num_classes, config, seed, dtype=np.float32):
    if method not in METHODS:
        from ..errors import ConfigurationError

        raise ConfigurationError(f"unknown method {method!r}; available: {sorted(METHODS)}")
    cls, _ = METHODS[method]
    return cls(arch_spec, num_classes, config, seed, dtype)
