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
Zero-shot Plugin

Class representations z_c taken from the scads embeddings become the
weights of the classification head. A ridge least-squares projector maps
features into the embedding space, fitted on the auxiliary examples
against the embedding of the concept each example came from:

    p(c | x) = softmax_c(scale * z_c . (P x + p0))

No labeled target example is used.
"""
import numpy as np

import taglets.lib.abstracttaglet as abstracttaglet

from taglets.lib.embeddings import approximation_embedding
from taglets.lib.errors import NoTrainingData
from taglets.lib.softmax import softmax_linear_model, taglet
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_zeroshot')

MODULE_NAME = "zeroshot"
DEFAULT_RIDGE = 1e-6
DEFAULT_LOGIT_SCALE = 1.0


def class_representations(targets, scads):
    """
    C x m matrix of target class embeddings (approximated when absent)
    """
    return np.vstack([approximation_embedding(cid, scads)
                      for _, cid in targets])


def fit_projector(features, embeddings, ridge=DEFAULT_RIDGE):
    """
    Affine least squares features -> embeddings; returns (P, p0)
    """
    n, d = features.shape
    Xa = np.hstack([features, np.ones((n, 1))])
    gram = Xa.T @ Xa + ridge * np.eye(d + 1)
    coef = np.linalg.solve(gram, Xa.T @ embeddings)
    return coef[:d].T, coef[d]


def build_zeroshot_taglet(targets, scads, selection, ridge=DEFAULT_RIDGE,
                          logit_scale=DEFAULT_LOGIT_SCALE, name=MODULE_NAME):
    Z = class_representations(targets, scads)
    if selection is None or len(selection) == 0:
        raise NoTrainingData("zero-shot projector needs auxiliary examples")

    Y = np.vstack([scads[selection.concept_of(label)]
                   for label in selection.data.labels])
    P, p0 = fit_projector(selection.data.features, Y, ridge)
    logger.info("zeroshot - projector %dx%d fitted on %d examples" %
                (P.shape[0], P.shape[1], len(selection)))

    model = softmax_linear_model(logit_scale * (Z @ P),
                                 logit_scale * (Z @ p0))
    return taglet(name, [n for n, _ in targets], model)


class plugin_impl(abstracttaglet.taglet_module_base):
    def __init__(self, config):
        logger.info("__init__")

        if config is None:
            raise ValueError("zeroshot configuration is not given correctly")

        self.ridge = float(config.get("ridge", DEFAULT_RIDGE))
        self.logit_scale = float(config.get("logit_scale",
                                            DEFAULT_LOGIT_SCALE))
        if self.ridge <= 0:
            raise ValueError("ridge must be > 0")

    def name(self):
        return MODULE_NAME

    def requires_labeled(self):
        return False

    def uses_unlabeled(self):
        return False

    def train(self, task):
        logger.info("train - %r" % task)
        return build_zeroshot_taglet(task.targets, task.scads,
                                     task.selection, self.ridge,
                                     self.logit_scale)
