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
Labeled examples and the feature CSV format

    class,f1,...,fd     one row per example, UTF-8, decimal point '.'

Unlabeled files drop the class column.
"""
import csv

import numpy as np

from taglets.lib.errors import MalformedData, ShapeError

CLASS_COLUMN = "class"


class labeled_example(object):
    """
    A feature vector and its class index
    """
    def __init__(self, features, label):
        self.features = np.asarray(features, dtype=np.float64)
        self.label = int(label)

    def __eq__(self, other):
        return (self.label == other.label and
                np.array_equal(self.features, other.features))

    def __repr__(self):
        return "<labeled_example %d d(%d)>" % \
            (self.label, self.features.shape[0])


class example_set(object):
    """
    Features as an (n, d) matrix with optional integer labels
    """
    def __init__(self, features, labels=None, dimension=None):
        features = np.asarray(features, dtype=np.float64)
        if features.size == 0:
            if dimension is None:
                dimension = features.shape[1] if features.ndim == 2 else 0
            features = np.zeros((0, dimension), dtype=np.float64)
        if features.ndim != 2:
            raise ShapeError("features must be a matrix, got %d dims" %
                             features.ndim)
        if not np.all(np.isfinite(features)):
            raise MalformedData("features contain non-finite values")

        self.features = features
        if labels is None:
            self.labels = None
        else:
            self.labels = np.asarray(labels, dtype=np.int64).reshape(-1)
            if self.labels.shape[0] != features.shape[0]:
                raise ShapeError("%d labels for %d examples" %
                                 (self.labels.shape[0], features.shape[0]))

    def __len__(self):
        return self.features.shape[0]

    def __repr__(self):
        return "<example_set n(%d) d(%d) labeled(%s)>" % \
            (len(self), self.dimension, self.labels is not None)

    @property
    def dimension(self):
        return self.features.shape[1]

    @classmethod
    def fromExamples(cls, examples, dimension=None):
        if not examples:
            return cls(np.zeros((0, dimension or 0)), np.zeros(0),
                       dimension=dimension)
        dims = set(e.features.shape[0] for e in examples)
        if len(dims) != 1:
            raise ShapeError("examples have mixed dimensions %s" %
                             sorted(dims))
        return cls(np.vstack([e.features for e in examples]),
                   [e.label for e in examples])

    @classmethod
    def fromCsv(cls, path, class_names=None):
        """
        Read a feature CSV; class names are mapped to their position in
        class_names
        """
        names, features = read_examples_csv(path)
        if names is None or class_names is None:
            return cls(features)

        index = dict((name, i) for i, name in enumerate(class_names))
        labels = []
        for row, name in enumerate(names):
            if name not in index:
                # header is line 1
                raise MalformedData("unknown class %s" % name,
                                    line=row + 2, path=path)
            labels.append(index[name])
        return cls(features, labels, dimension=features.shape[1])


def _decoded_lines(f, path):
    for line_no, raw in enumerate(f, 1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedData("not UTF-8 - %s" % e, line=line_no,
                                path=path)


def read_examples_csv(path):
    """
    Returns (class names or None, features)
    """
    with open(path, "rb") as f:
        reader = csv.reader(_decoded_lines(f, path))
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedData("missing header", line=1, path=path)

        labeled = len(header) > 0 and header[0].strip() == CLASS_COLUMN
        d = len(header) - 1 if labeled else len(header)
        if d <= 0:
            raise MalformedData("no feature columns", line=1, path=path)

        names = [] if labeled else None
        rows = []
        for record in reader:
            line = reader.line_num
            if not record:
                continue
            if len(record) != len(header):
                raise MalformedData(
                    "expected %d fields, got %d" % (len(header), len(record)),
                    line=line, path=path)
            values = record[1:] if labeled else record
            try:
                vec = [float(v) for v in values]
            except ValueError as e:
                raise MalformedData(str(e), line=line, path=path)
            if not all(np.isfinite(vec)):
                raise MalformedData("non-finite feature value",
                                    line=line, path=path)
            if labeled:
                names.append(record[0])
            rows.append(vec)

    if rows:
        features = np.array(rows, dtype=np.float64)
    else:
        features = np.zeros((0, d), dtype=np.float64)
    return names, features


def format_float(value):
    # repr round-trips doubles exactly
    return repr(float(value))


def write_examples_csv(path, features, names=None, prefix_columns=None):
    """
    Write features with an optional leading class column; prefix_columns
    is an optional (header, matrix) pair written before the features
    """
    features = np.asarray(features, dtype=np.float64)
    d = features.shape[1] if features.ndim == 2 else 0
    header = []
    if names is not None:
        header.append(CLASS_COLUMN)
    if prefix_columns is not None:
        header.extend(prefix_columns[0])
    header.extend("f%d" % (i + 1) for i in range(d))

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i in range(features.shape[0]):
            row = []
            if names is not None:
                row.append(names[i])
            if prefix_columns is not None:
                row.extend(format_float(v) for v in prefix_columns[1][i])
            row.extend(format_float(v) for v in features[i])
            writer.writerow(row)
