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
Softmax regression shared by every taglet and by the end model
"""
import json

import numpy as np

from pydantic import BaseModel, ConfigDict, Field

from taglets.lib.errors import ShapeError, InfiniteLoss, MalformedData
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_softmax')

# keeps predicted probabilities strictly inside (0, 1)
PROB_FLOOR = 1e-12


class train_config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=0.003, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    batch_size: int = Field(default=128, ge=1)
    epochs: int = Field(default=30, ge=0)
    seed: int = 0

    def with_seed(self, seed):
        return self.model_copy(update={"seed": int(seed)})


def log_softmax(Z):
    Z = Z - np.max(Z, axis=1, keepdims=True)
    return Z - np.log(np.sum(np.exp(Z), axis=1, keepdims=True))


def softmax(Z):
    return np.exp(log_softmax(Z))


def soft_cross_entropy(p, q):
    """
    -sum_c p_c log q_c with 0 log(.) = 0
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape != q.shape:
        raise ShapeError("target has %d classes, prediction %d" %
                         (p.shape[0], q.shape[0]))
    support = p > 0
    if np.any(q[support] <= 0):
        raise InfiniteLoss("prediction is 0 where the target is positive")
    return float(-np.sum(p[support] * np.log(q[support])))


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ShapeError("labels outside [0, %d)" % num_classes)
    T = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    T[np.arange(labels.shape[0]), labels] = 1.0
    return T


class softmax_linear_model(object):
    """
    p(y | x) = softmax(W x + b)
    """
    def __init__(self, W, b=None):
        self.W = np.array(W, dtype=np.float64, ndmin=2)
        if b is None:
            b = np.zeros(self.W.shape[0])
        self.b = np.array(b, dtype=np.float64).reshape(-1)
        if self.b.shape[0] != self.W.shape[0]:
            raise ShapeError("bias has %d entries for %d classes" %
                             (self.b.shape[0], self.W.shape[0]))
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise MalformedData("model has non-finite weights")

    @classmethod
    def zeros(cls, num_classes, dimension):
        return cls(np.zeros((num_classes, dimension)), np.zeros(num_classes))

    def __eq__(self, other):
        return (np.array_equal(self.W, other.W) and
                np.array_equal(self.b, other.b))

    def __repr__(self):
        return "<softmax_linear_model classes(%d) d(%d)>" % \
            (self.num_classes, self.dimension)

    @property
    def num_classes(self):
        return self.W.shape[0]

    @property
    def dimension(self):
        return self.W.shape[1]

    def copy(self):
        return softmax_linear_model(self.W.copy(), self.b.copy())

    def _check_features(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.dimension:
            raise ShapeError("features have dimension %d, model expects %d" %
                             (X.shape[1], self.dimension))
        return X

    def logits(self, X):
        X = self._check_features(X)
        return X @ self.W.T + self.b

    def predict_proba(self, X):
        P = softmax(self.logits(X))
        return (P + PROB_FLOOR) / (1.0 + self.num_classes * PROB_FLOOR)

    def loss_and_grad(self, X, T, weights=None, normalizer=None):
        """
        Mean (or weights-summed over normalizer) soft cross entropy of the
        raw softmax and its gradient with respect to W and b
        """
        X = self._check_features(X)
        n = X.shape[0]
        if T.shape != (n, self.num_classes):
            raise ShapeError("targets have shape %s, expected %s" %
                             (T.shape, (n, self.num_classes)))
        if normalizer is None:
            normalizer = float(n)

        logP = log_softmax(X @ self.W.T + self.b)
        per_example = -np.sum(T * logP, axis=1)
        dZ = np.exp(logP) * T.sum(axis=1, keepdims=True) - T
        if weights is not None:
            per_example = per_example * weights
            dZ = dZ * weights[:, None]

        loss = float(np.sum(per_example) / normalizer)
        dZ = dZ / normalizer
        return loss, dZ.T @ X, dZ.sum(axis=0)

    def loss(self, X, T):
        return self.loss_and_grad(X, T)[0]

    def toDict(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}


class momentum_optimizer(object):
    """
    Heavy-ball SGD: v <- mu v - lr g; theta <- theta + v (in place)
    """
    def __init__(self, params, learning_rate, momentum):
        self.params = params
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, grads):
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.momentum
            v -= self.learning_rate * g
            p += v


def targets_of(data, num_classes):
    """
    Soft target matrix of an example set (one-hot for hard labels)
    """
    soft = getattr(data, "soft_targets", None)
    if soft is not None:
        if soft.shape[1] != num_classes:
            raise ShapeError("soft labels have %d classes, model has %d" %
                             (soft.shape[1], num_classes))
        return soft
    if data.labels is None:
        raise ShapeError("training data is unlabeled")
    return one_hot(data.labels, num_classes)


def fit_soft(model, X, T, cfg):
    """
    Mini-batch momentum SGD on mean soft cross entropy; returns the trained
    copy and the full-data loss before training and after every epoch
    """
    model = model.copy()
    X = model._check_features(X)
    n = X.shape[0]
    if n == 0 or cfg.epochs == 0:
        return model, ([model.loss(X, T)] if n else [])

    rng = np.random.default_rng(cfg.seed)
    opt = momentum_optimizer([model.W, model.b], cfg.learning_rate,
                             cfg.momentum)
    history = [model.loss(X, T)]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, gW, gb = model.loss_and_grad(X[idx], T[idx])
            opt.step([gW, gb])
        history.append(model.loss(X, T))

    logger.debug("fit_soft - n(%d) epochs(%d) loss %.6f -> %.6f" %
                 (n, cfg.epochs, history[0], history[-1]))
    return model, history


def train_supervised(model, data, cfg):
    """
    Train on an example set with hard labels, or any object exposing
    features and soft_targets
    """
    if data.features.shape[1] != model.dimension:
        raise ShapeError("data has dimension %d, model expects %d" %
                         (data.features.shape[1], model.dimension))
    T = targets_of(data, model.num_classes)
    return fit_soft(model, data.features, T, cfg)


def accuracy_of(P, labels):
    """
    Fraction of rows whose argmax (lowest index on ties) equals the label
    """
    labels = np.asarray(labels).reshape(-1)
    return float(np.mean(np.argmax(P, axis=1) == labels))


class taglet(object):
    """
    A trained classifier over the target classes
    """
    def __init__(self, name, classes, model):
        self.name = name
        self.classes = list(classes)
        self.model = model
        if model.num_classes != len(self.classes):
            raise ShapeError("taglet %s has %d classes but a %d-way model" %
                             (name, len(self.classes), model.num_classes))

    def __repr__(self):
        return "<taglet %s classes(%d) d(%d)>" % \
            (self.name, len(self.classes), self.model.dimension)

    @property
    def num_classes(self):
        return len(self.classes)

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return self.model.predict_proba(x)[0]
        return self.model.predict_proba(x)

    def toJson(self):
        msg = {"name": self.name, "classes": self.classes}
        msg.update(self.model.toDict())
        return json.dumps(msg)

    @classmethod
    def fromJson(cls, json_str):
        try:
            msg = json.loads(json_str)
            return cls(msg["name"], msg["classes"],
                       softmax_linear_model(msg["W"], msg["b"]))
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedData("bad taglet record - %s" % e)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.toJson())
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            try:
                return cls.fromJson(f.read())
            except MalformedData as e:
                raise MalformedData(e.value, path=path)
