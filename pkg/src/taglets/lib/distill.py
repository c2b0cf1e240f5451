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
Ensembling taglets into soft pseudo labels and distilling them into a
single servable end model
"""
import csv

import numpy as np

from taglets.lib.errors import (ShapeError, NoTaglets, NoUnlabeledData,
                                NoTrainingData, NoTestData, MalformedData)
from taglets.lib.exampleio import write_examples_csv
from taglets.lib.softmax import (softmax_linear_model, taglet, fit_soft,
                                 one_hot, accuracy_of)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_distill')

END_MODEL_NAME = "end_model"


class vote_matrix(object):
    """
    One probability vector per taglet, in taglet order
    """
    def __init__(self, rows):
        rows = np.array(rows, dtype=np.float64, ndmin=2)
        if rows.shape[0] == 0:
            raise NoTaglets("vote matrix needs at least one row")
        if np.any(rows < 0) or np.any(rows > 1):
            raise ShapeError("votes must lie in [0, 1]")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
            raise ShapeError("every vote row must sum to 1")
        self.rows = rows

    def __repr__(self):
        return "<vote_matrix %dx%d>" % self.rows.shape

    @property
    def shape(self):
        return self.rows.shape


def _class_count(taglets):
    if not taglets:
        raise NoTaglets("no taglets to ensemble")
    counts = set(t.num_classes for t in taglets)
    if len(counts) != 1:
        raise ShapeError("taglets disagree on the class count: %s" %
                         sorted(counts))
    return counts.pop()


def build_vote_matrix(taglets, x):
    _class_count(taglets)
    return vote_matrix([t.predict(x) for t in taglets])


def aggregate_votes(V):
    """
    Soft pseudo label: the arithmetic mean of the vote rows
    """
    rows = V.rows if isinstance(V, vote_matrix) else vote_matrix(V).rows
    return rows.sum(axis=0) / rows.shape[0]


def ensemble_predict(taglets, X):
    """
    aggregate_votes(build_vote_matrix(taglets, x)) for every row of X
    """
    _class_count(taglets)
    X = np.asarray(X, dtype=np.float64)
    stacked = np.stack([t.predict(X) for t in taglets])
    if stacked.ndim == 2:
        stacked = stacked[:, None, :]
    # sequential sum over taglets, as in aggregate_votes
    return stacked.sum(axis=0) / stacked.shape[0]


class pseudo_labeled_set(object):
    def __init__(self, features, soft_targets, provenance=None):
        self.features = np.asarray(features, dtype=np.float64)
        self.soft_targets = np.asarray(soft_targets, dtype=np.float64)
        self.provenance = list(provenance or [])
        if self.features.shape[0] != self.soft_targets.shape[0]:
            raise ShapeError("%d soft labels for %d examples" %
                             (self.soft_targets.shape[0],
                              self.features.shape[0]))

    def __len__(self):
        return self.features.shape[0]

    def __repr__(self):
        return "<pseudo_labeled_set n(%d) C(%d) from %s>" % \
            (len(self), self.num_classes, self.provenance)

    @property
    def dimension(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return self.soft_targets.shape[1]

    def items(self):
        return list(zip(self.features, self.soft_targets))

    def save(self, path):
        C = self.num_classes
        write_examples_csv(path, self.features, prefix_columns=(
            ["p%d" % (c + 1) for c in range(C)], self.soft_targets))

    @classmethod
    def load(cls, path, num_classes):
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                raise MalformedData("missing header", line=1, path=path)
            for record in reader:
                if len(record) != len(header):
                    raise MalformedData("ragged row", line=reader.line_num,
                                        path=path)
                try:
                    rows.append([float(v) for v in record])
                except ValueError as e:
                    raise MalformedData(str(e), line=reader.line_num,
                                        path=path)
        data = np.array(rows, dtype=np.float64).reshape(
            -1, len(header))
        return cls(data[:, num_classes:], data[:, :num_classes])


def pseudo_label_set(taglets, unlabeled):
    if not taglets:
        raise NoTaglets("no taglets to pseudo-label with")
    if unlabeled is None or len(unlabeled) == 0:
        raise NoUnlabeledData("no unlabeled examples")

    soft = ensemble_predict(taglets, unlabeled.features)
    logger.info("pseudo_label_set - %d examples from %s" %
                (len(unlabeled), [t.name for t in taglets]))
    return pseudo_labeled_set(unlabeled.features, soft,
                              [t.name for t in taglets])


class end_model(taglet):
    """
    Served on its own weights only
    """
    def __init__(self, classes, model, name=END_MODEL_NAME):
        super(end_model, self).__init__(name, classes, model)

    @classmethod
    def fromJson(cls, json_str):
        t = taglet.fromJson(json_str)
        return cls(t.classes, t.model, t.name)


def train_end_model(pseudo, labeled, cfg, classes):
    """
    Soft cross entropy over the pseudo-labeled and labeled examples,
    labeled ones entering as one-hot targets
    """
    C = len(classes)
    parts = [data for data in [pseudo, labeled]
             if data is not None and len(data) > 0]
    if not parts:
        raise NoTrainingData("no pseudo-labeled and no labeled examples")
    dims = set(data.dimension for data in parts)
    if len(dims) != 1:
        raise ShapeError("pseudo-labeled and labeled dimensions differ: %s" %
                         sorted(dims))
    d = dims.pop()

    X = []
    T = []
    if pseudo is not None and len(pseudo) > 0:
        if pseudo.num_classes != C:
            raise ShapeError("pseudo labels have %d classes, expected %d" %
                             (pseudo.num_classes, C))
        X.append(pseudo.features)
        T.append(pseudo.soft_targets)
    if labeled is not None and len(labeled) > 0:
        X.append(labeled.features)
        T.append(one_hot(labeled.labels, C))

    model, history = fit_soft(softmax_linear_model.zeros(C, d),
                              np.vstack(X), np.vstack(T), cfg)
    logger.info("train_end_model - %d examples, loss %.6f" %
                (sum(x.shape[0] for x in X),
                 history[-1] if history else float("nan")))
    return end_model(classes, model)


def evaluate_accuracy(model, test):
    """
    Top-1 accuracy; argmax ties go to the lowest class index
    """
    if test is None or len(test) == 0:
        raise NoTestData("no test examples")
    if isinstance(model, softmax_linear_model):
        P = model.predict_proba(test.features)
    else:
        P = model.predict(test.features)
    return accuracy_of(np.array(P, ndmin=2, copy=None), test.labels)


def evaluate_ensemble(taglets, test):
    if test is None or len(test) == 0:
        raise NoTestData("no test examples")
    return accuracy_of(ensemble_predict(taglets, test.features), test.labels)


def save_pseudo_labels(pseudo, path):
    logger.info("save_pseudo_labels - %s" % path)
    pseudo.save(path)
