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
Auxiliary data selection

For every target class the N closest candidate concepts are ranked by
scads similarity and K examples of each are relabeled into the
auxiliary label space: class i, rank r -> i * N + r.
"""
import os
import json

import numpy as np

from taglets.lib.errors import EmptyCandidates, UnknownConcept, MalformedData
from taglets.lib.exampleio import (example_set, read_examples_csv,
                                   write_examples_csv)
from taglets.lib.embeddings import top_n_related
from taglets.lib.scadsgraph import prune_level
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_selection')

DEFAULT_N_RELATED = 10
DEFAULT_PER_CONCEPT = 100


class selection_request(object):
    def __init__(self,
                 targets=None,
                 n_related=DEFAULT_N_RELATED,
                 per_concept=DEFAULT_PER_CONCEPT,
                 level=prune_level.NONE,
                 seed=0):
        # ordered (class name, concept id) pairs
        self.targets = [(str(name), str(cid)) for name, cid in
                        (targets or [])]
        if not self.targets:
            raise ValueError("selection needs at least one target class")
        names = [name for name, _ in self.targets]
        if len(set(names)) != len(names):
            raise ValueError("target class names must be unique")
        if int(n_related) < 1:
            raise ValueError("n_related must be >= 1")
        if int(per_concept) < 1:
            raise ValueError("per_concept must be >= 1")

        self.n_related = int(n_related)
        self.per_concept = int(per_concept)
        self.level = prune_level.parse(level)
        self.seed = int(seed)

    def __repr__(self):
        return "<selection_request C(%d) N(%d) K(%d) prune(%s) seed(%d)>" % \
            (len(self.targets), self.n_related, self.per_concept, self.level,
             self.seed)


class aux_selection(object):
    def __init__(self, request, related, data, dimension=None):
        self.targets = list(request.targets)
        self.n_related = request.n_related
        self.per_concept = request.per_concept
        self.level = request.level
        self.seed = request.seed
        # class name -> [(concept id, similarity)], descending
        self.related = related
        # example_set labeled with auxiliary class indices
        self.data = data
        self.dimension = dimension if dimension is not None \
            else data.dimension

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return "<aux_selection C(%d) N(%d) examples(%d)>" % \
            (len(self.targets), self.n_related, len(self))

    @property
    def num_classes(self):
        return len(self.targets)

    @property
    def num_aux_classes(self):
        return self.n_related * len(self.targets)

    def class_names(self):
        return [name for name, _ in self.targets]

    def aux_label_of(self, class_name, rank):
        names = self.class_names()
        if class_name not in names:
            raise UnknownConcept("%s is not a target class" % class_name)
        if rank < 0 or rank >= self.n_related:
            raise IndexError("rank %d out of range [0, %d)" %
                             (rank, self.n_related))
        return names.index(class_name) * self.n_related + rank

    def aux_labels(self):
        """
        auxiliary index -> (class name, rank, concept id) of filled slots
        """
        labels = {}
        for name in self.class_names():
            for rank, (cid, _) in enumerate(self.related[name]):
                labels[self.aux_label_of(name, rank)] = (name, rank, cid)
        return labels

    def concept_of(self, aux_label):
        """
        source concept of an auxiliary index
        """
        label = int(aux_label)
        class_index, rank = divmod(label, self.n_related)
        if label < 0 or class_index >= len(self.targets):
            raise IndexError("auxiliary index %d out of range" % label)
        related = self.related[self.targets[class_index][0]]
        if rank >= len(related):
            raise IndexError("no related concept at auxiliary index %d" %
                             label)
        return related[rank][0]


def select_related_data(graph, scads, request):
    logger.info("select_related_data - %r" % request)

    target_ids = [cid for _, cid in request.targets]
    candidates = graph.prune_candidates(target_ids, request.level)

    unembedded = sorted(cid for cid in candidates if cid not in scads)
    if unembedded:
        logger.warning("select_related_data - %d candidates have no scads "
                       "vector and are skipped: %s" %
                       (len(unembedded), unembedded[:10]))
        candidates = candidates - set(unembedded)
    if not candidates:
        raise EmptyCandidates("no candidate concepts at prune level %s" %
                              request.level)

    related = {}
    feature_rows = []
    labels = []
    for i, (name, cid) in enumerate(request.targets):
        related[name] = top_n_related(cid, candidates, request.n_related,
                                      scads)
        for rank, (rcid, _) in enumerate(related[name]):
            examples = graph.examples_for_concept(rcid, request.per_concept,
                                                  seed=request.seed)
            if len(examples) < request.per_concept:
                logger.info("select_related_data - %s holds %d of %d "
                            "examples" % (rcid, len(examples),
                                          request.per_concept))
            for example in examples:
                feature_rows.append(example.features)
                labels.append(i * request.n_related + rank)

    dimension = graph.dimension or 0
    if feature_rows:
        data = example_set(np.vstack(feature_rows), labels)
    else:
        data = example_set(np.zeros((0, dimension)), np.zeros(0),
                           dimension=dimension)
    selection = aux_selection(request, related, data, dimension=dimension)
    logger.info("select_related_data - %d examples over %d auxiliary "
                "classes" % (len(selection), selection.num_aux_classes))
    return selection


"""
Serialization: JSON summary plus a CSV of relabeled examples
"""


def save_selection(selection, path):
    logger.info("save_selection - %s" % path)

    csv_path = os.path.splitext(path)[0] + ".csv"
    write_examples_csv(csv_path, selection.data.features,
                       names=[str(y) for y in selection.data.labels])

    msg = {
        "targets": [{"name": name, "concept": cid}
                    for name, cid in selection.targets],
        "n_related": selection.n_related,
        "per_concept": selection.per_concept,
        "prune_level": selection.level,
        "seed": selection.seed,
        "dimension": selection.dimension,
        "related": dict((name, [{"concept": cid, "sim": sim}
                                for cid, sim in selection.related[name]])
                        for name in selection.class_names()),
        "aux_labels": dict((str(idx), {"class": name, "rank": rank,
                                       "concept": cid})
                           for idx, (name, rank, cid) in
                           sorted(selection.aux_labels().items())),
        "examples": os.path.basename(csv_path),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(msg, f, indent=2, ensure_ascii=False)
        f.write("\n")


def load_selection(path):
    logger.info("load_selection - %s" % path)

    with open(path, "r", encoding="utf-8") as f:
        try:
            msg = json.load(f)
        except ValueError as e:
            raise MalformedData("selection is not JSON - %s" % e, path=path)

    try:
        request = selection_request(
            [(t["name"], t["concept"]) for t in msg["targets"]],
            msg["n_related"], msg["per_concept"], msg["prune_level"],
            msg["seed"])
        related = dict((name, [(r["concept"], r["sim"]) for r in rows])
                       for name, rows in msg["related"].items())
        csv_path = os.path.join(os.path.dirname(os.path.abspath(path)),
                                msg["examples"])
        dimension = msg.get("dimension")
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedData("bad selection record - %s" % e, path=path)

    names, features = read_examples_csv(csv_path)
    try:
        labels = [int(name) for name in (names or [])]
    except ValueError as e:
        raise MalformedData("auxiliary label is not an integer - %s" % e,
                            path=csv_path)
    data = example_set(features, labels, dimension=features.shape[1])
    return aux_selection(request, related, data, dimension=dimension)
