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
Multi-task Plugin

Jointly learns the target task on the labeled data and the auxiliary
task on the selected auxiliary data through a shared linear map:

    L_joint = L_target + lambda * L_aux
"""
import numpy as np

import taglets.lib.abstracttaglet as abstracttaglet

from taglets.lib.config import derive_seed
from taglets.lib.errors import NoLabeledData, InvalidWeight
from taglets.lib.softmax import (log_softmax, momentum_optimizer,
                                 softmax_linear_model, taglet, targets_of)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_multitask')

MODULE_NAME = "multitask"
DEFAULT_LAMBDA = 1.0


def _head_grads(H, T, W, b):
    """
    Mean soft cross entropy of softmax(H W^T + b); gradients for W, b
    and for the shared representation H
    """
    n = H.shape[0]
    logP = log_softmax(H @ W.T + b)
    loss = -np.sum(T * logP) / n
    dZ = (np.exp(logP) * T.sum(axis=1, keepdims=True) - T) / n
    return loss, dZ.T @ H, dZ.sum(axis=0), dZ @ W


class _aux_stream(object):
    """
    Endless seeded sequence of auxiliary mini-batches
    """
    def __init__(self, n, batch_size, seed):
        self.n = n
        self.batch_size = batch_size
        self.rng = np.random.default_rng(seed)
        self.order = self.rng.permutation(n)
        self.pos = 0

    def next(self):
        picked = []
        while len(picked) < min(self.batch_size, self.n):
            if self.pos >= self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
            take = min(self.batch_size - len(picked), self.n - self.pos)
            picked.extend(self.order[self.pos:self.pos + take])
            self.pos += take
        return np.array(picked, dtype=np.int64)


def train_multitask_taglet(selection, labeled, lam, cfg, hidden_dim=None,
                           name=MODULE_NAME):
    if lam is None or not np.isfinite(lam) or lam < 0:
        raise InvalidWeight("lambda must be >= 0, got %r" % lam)
    if labeled is None or len(labeled) == 0:
        raise NoLabeledData("multi-task needs labeled examples")
    abstracttaglet.check_dimensions(selection, labeled)

    C = selection.num_classes
    d = labeled.dimension
    h = int(hidden_dim or d)

    X = labeled.features
    Tx = targets_of(labeled, C)
    use_aux = lam > 0 and len(selection) > 0

    A = np.eye(h, d)
    Wt = np.zeros((C, h))
    bt = np.zeros(C)
    params = [A, Wt, bt]
    if use_aux:
        R = selection.data.features
        Tr = targets_of(selection.data, selection.num_aux_classes)
        Wa = np.zeros((selection.num_aux_classes, h))
        ba = np.zeros(selection.num_aux_classes)
        params.extend([Wa, ba])
        stream = _aux_stream(len(selection), cfg.batch_size,
                             derive_seed(cfg.seed, "multitask/aux"))

    opt = momentum_optimizer(params, cfg.learning_rate, cfg.momentum)
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    loss = 0.0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            H = X[idx] @ A.T
            loss, gWt, gbt, gH = _head_grads(H, Tx[idx], Wt, bt)
            gA = gH.T @ X[idx]
            grads = [gA, gWt, gbt]
            if use_aux:
                ridx = stream.next()
                Hr = R[ridx] @ A.T
                aux_loss, gWa, gba, gHr = _head_grads(Hr, Tr[ridx], Wa, ba)
                loss += lam * aux_loss
                grads[0] = gA + lam * (gHr.T @ R[ridx])
                grads.extend([lam * gWa, lam * gba])
            opt.step(grads)

    logger.info("multitask - lambda %s, %d epochs, last batch loss %.6f" %
                (lam, cfg.epochs, loss))
    # the served taglet folds the shared map into the target head
    model = softmax_linear_model(Wt @ A, bt.copy())
    return taglet(name, selection.class_names(), model)


class plugin_impl(abstracttaglet.taglet_module_base):
    def __init__(self, config):
        logger.info("__init__")

        if config is None:
            raise ValueError("multitask configuration is not given "
                             "correctly")

        self.target_cfg = abstracttaglet.phase_config(config, "target_train")
        self.lam = float(config.get("lambda", DEFAULT_LAMBDA))
        if self.lam < 0:
            raise InvalidWeight("lambda must be >= 0, got %r" % self.lam)
        self.hidden_dim = config.get("hidden_dim")

    def name(self):
        return MODULE_NAME

    def requires_labeled(self):
        return True

    def uses_unlabeled(self):
        return False

    def train(self, task):
        logger.info("train - %r" % task)
        return train_multitask_taglet(task.selection, task.labeled,
                                      self.lam, self.target_cfg,
                                      self.hidden_dim)
