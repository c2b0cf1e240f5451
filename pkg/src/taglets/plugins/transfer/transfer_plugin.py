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
Transfer Plugin

Fine-tunes sequentially: an N*C-way head on the selected auxiliary data,
then a C-way head on the labeled data. The C-way rows start from the
mean of the auxiliary rows of each class's related concepts.
"""
import numpy as np

import taglets.lib.abstracttaglet as abstracttaglet

from taglets.lib.errors import NoLabeledData
from taglets.lib.softmax import (softmax_linear_model, taglet,
                                 train_supervised)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_transfer')

MODULE_NAME = "transfer"


def head_from_auxiliary(selection, aux_model):
    """
    C-way head whose row c is the mean of the auxiliary rows of class c
    """
    C = selection.num_classes
    W = np.zeros((C, aux_model.dimension))
    b = np.zeros(C)
    present = set(int(y) for y in np.unique(selection.data.labels))
    for c, name in enumerate(selection.class_names()):
        rows = [selection.aux_label_of(name, rank)
                for rank in range(len(selection.related[name]))]
        rows = [r for r in rows if r in present]
        if rows:
            W[c] = aux_model.W[rows].mean(axis=0)
            b[c] = aux_model.b[rows].mean()
    return softmax_linear_model(W, b)


def pretrain_on_auxiliary(selection, labeled, cfg, aux_cfg=None,
                          head_init=True):
    """
    Both transfer phases; returns the C-way model
    """
    if labeled is None or len(labeled) == 0:
        raise NoLabeledData("transfer needs labeled examples")
    abstracttaglet.check_dimensions(selection, labeled)

    d = labeled.dimension
    model = softmax_linear_model.zeros(selection.num_classes, d)
    if len(selection) > 0:
        aux_cfg = aux_cfg or cfg
        aux_model, history = train_supervised(
            softmax_linear_model.zeros(selection.num_aux_classes, d),
            selection.data, aux_cfg)
        logger.info("transfer - auxiliary phase on %d examples, loss %.6f" %
                    (len(selection), history[-1] if history else 0.0))
        if head_init:
            model = head_from_auxiliary(selection, aux_model)

    model, history = train_supervised(model, labeled, cfg)
    logger.info("transfer - target phase on %d examples, loss %.6f" %
                (len(labeled), history[-1] if history else 0.0))
    return model


def train_transfer_taglet(selection, labeled, cfg, aux_cfg=None,
                          head_init=True, name=MODULE_NAME):
    model = pretrain_on_auxiliary(selection, labeled, cfg, aux_cfg,
                                  head_init)
    return taglet(name, selection.class_names(), model)


class plugin_impl(abstracttaglet.taglet_module_base):
    def __init__(self, config):
        logger.info("__init__")

        if config is None:
            raise ValueError("transfer configuration is not given correctly")

        self.target_cfg = abstracttaglet.phase_config(config, "target_train")
        self.aux_cfg = abstracttaglet.phase_config(config, "aux_train",
                                                   self.target_cfg)
        self.head_init = bool(config.get("head_init", True))

    def name(self):
        return MODULE_NAME

    def requires_labeled(self):
        return True

    def uses_unlabeled(self):
        return False

    def train(self, task):
        logger.info("train - %r" % task)
        return train_transfer_taglet(task.selection, task.labeled,
                                     self.target_cfg, self.aux_cfg,
                                     self.head_init)
