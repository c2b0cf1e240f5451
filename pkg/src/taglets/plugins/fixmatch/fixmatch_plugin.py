#!/usr/bin/env python

"""
   Copyright 2016 The Trustees of University of Arizona

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
"""

"""
FixMatch Plugin

Starts from the transfer model (auxiliary data, then labeled data) and
trains on unlabeled data: a weak perturbation u_a pseudo-labels, a
strong perturbation u_b is fitted, and only examples whose confidence on
u_a reaches tau contribute.
"""
import numpy as np

import taglets.lib.abstracttaglet as abstracttaglet

from taglets.plugins.transfer.transfer_plugin import pretrain_on_auxiliary
from taglets.lib.errors import (InvalidThreshold, NoUnlabeledData,
                                ShapeError)
from taglets.lib.softmax import (momentum_optimizer, one_hot, softmax,
                                 taglet)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_fixmatch')

MODULE_NAME = "fixmatch"
DEFAULT_TAU = 0.95


class perturb_spec(object):
    """
    Additive Gaussian noise; sigma = multiplier * per-dimension std of U
    """
    def __init__(self, weak=0.01, strong=0.1, seed=0):
        if weak < 0 or strong < 0:
            raise ValueError("perturbation multipliers must be >= 0")
        self.weak = float(weak)
        self.strong = float(strong)
        self.seed = int(seed)

    def __repr__(self):
        return "<perturb_spec weak(%s) strong(%s) seed(%d)>" % \
            (self.weak, self.strong, self.seed)

    @classmethod
    def fromDict(cls, dictionary):
        return cls(dictionary.get("weak", 0.01),
                   dictionary.get("strong", 0.1),
                   dictionary.get("seed", 0))


def confident_pseudo_labels(model, Ua, tau):
    """
    (mask, pseudo labels) of the weakly perturbed batch; mask is True
    where the top probability reaches tau
    """
    Pa = softmax(model.logits(Ua))
    return np.max(Pa, axis=1) >= tau, np.argmax(Pa, axis=1)


def unlabeled_losses(model, Ua, Ub, tau):
    """
    Per-example masked hard cross entropy between the pseudo label of u_a
    and the prediction on u_b; returns (losses, mask, pseudo labels)
    """
    mask, pseudo = confident_pseudo_labels(model, Ua, tau)
    Pb = softmax(model.logits(Ub))
    losses = np.zeros(Ua.shape[0])
    rows = np.nonzero(mask)[0]
    losses[rows] = -np.log(Pb[rows, pseudo[rows]])
    return losses, mask, pseudo


def unlabeled_gradient(model, Ua, Ub, tau, normalizer):
    """
    Gradient of the masked unlabeled loss summed over the batch and divided
    by normalizer; returns (gW, gb, mask)
    """
    mask, pseudo = confident_pseudo_labels(model, Ua, tau)
    # masked examples have weight 0 and so exactly zero gradient
    _, gW, gb = model.loss_and_grad(
        Ub, one_hot(pseudo, model.num_classes),
        weights=mask.astype(np.float64), normalizer=float(normalizer))
    return gW, gb, mask


def train_fixmatch_taglet(selection, labeled, unlabeled, tau, perturb, cfg,
                          aux_cfg=None, unlabeled_cfg=None,
                          name=MODULE_NAME):
    if tau is None or tau <= 0:
        raise InvalidThreshold("tau must be > 0, got %r" % tau)
    if unlabeled is None or len(unlabeled) == 0:
        raise NoUnlabeledData("fixmatch needs unlabeled examples")
    abstracttaglet.check_dimensions(selection, unlabeled)
    if labeled is not None and len(labeled) > 0 and \
            labeled.dimension != unlabeled.dimension:
        raise ShapeError("labeled data has dimension %d, unlabeled %d" %
                         (labeled.dimension, unlabeled.dimension))

    model = pretrain_on_auxiliary(selection, labeled, cfg, aux_cfg)
    unlabeled_cfg = unlabeled_cfg or cfg

    U = unlabeled.features
    std = U.std(axis=0)
    sigma_weak = perturb.weak * std
    sigma_strong = perturb.strong * std

    noise = np.random.default_rng(perturb.seed)
    rng = np.random.default_rng(unlabeled_cfg.seed)
    opt = momentum_optimizer([model.W, model.b],
                             unlabeled_cfg.learning_rate,
                             unlabeled_cfg.momentum)
    n = U.shape[0]
    used = 0
    for epoch in range(unlabeled_cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, unlabeled_cfg.batch_size):
            idx = order[start:start + unlabeled_cfg.batch_size]
            batch = U[idx]
            Ua = batch + noise.standard_normal(batch.shape) * sigma_weak
            Ub = batch + noise.standard_normal(batch.shape) * sigma_strong

            gW, gb, mask = unlabeled_gradient(model, Ua, Ub, tau, len(idx))
            used += int(mask.sum())
            opt.step([gW, gb])

    logger.info("fixmatch - tau %s, %d pseudo-labeled draws over %d epochs" %
                (tau, used, unlabeled_cfg.epochs))
    return taglet(name, selection.class_names(), model)


class plugin_impl(abstracttaglet.taglet_module_base):
    def __init__(self, config):
        logger.info("__init__")

        if config is None:
            raise ValueError("fixmatch configuration is not given correctly")

        self.target_cfg = abstracttaglet.phase_config(config, "target_train")
        self.aux_cfg = abstracttaglet.phase_config(config, "aux_train",
                                                   self.target_cfg)
        self.unlabeled_cfg = abstracttaglet.phase_config(
            config, "unlabeled_train", self.target_cfg)
        self.tau = float(config.get("tau", DEFAULT_TAU))
        if self.tau <= 0:
            raise InvalidThreshold("tau must be > 0, got %r" % self.tau)
        self.perturb = perturb_spec.fromDict(config.get("perturb") or {})

    def name(self):
        return MODULE_NAME

    def requires_labeled(self):
        return True

    def uses_unlabeled(self):
        return True

    def train(self, task):
        logger.info("train - %r" % task)
        return train_fixmatch_taglet(task.selection, task.labeled,
                                     task.unlabeled, self.tau, self.perturb,
                                     self.target_cfg, self.aux_cfg,
                                     self.unlabeled_cfg)
