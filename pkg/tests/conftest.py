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
Shared fixtures
"""

import os
import sys
import json

# import packages under src/
test_dirpath = os.path.dirname(os.path.abspath(__file__))
package_root = os.path.dirname(test_dirpath)
src_root = os.path.join(package_root, "src")
if src_root not in sys.path:
    sys.path.insert(0, src_root)

import numpy as np
import pytest

from taglets.lib.exampleio import write_examples_csv
from taglets.lib.embeddings import embedding_store
from taglets.lib.scadsgraph import (concept, relation_edge, concept_graph,
                                    dataset_manifest, IS_A)


def write_dataset(dirpath, name, per_class, classes=None):
    """
    per_class: class name -> list of feature vectors; returns the manifest
    """
    names = []
    rows = []
    for class_name, vectors in per_class.items():
        for v in vectors:
            names.append(class_name)
            rows.append(v)
    dim = len(rows[0]) if rows else 2
    csv_path = os.path.join(str(dirpath), "%s.csv" % name)
    write_examples_csv(csv_path, np.array(rows, dtype=np.float64)
                       .reshape(-1, dim), names=names)
    manifest_path = os.path.join(str(dirpath), "%s.json" % name)
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump({"name": name,
                   "classes": classes or dict((c, c) for c in per_class),
                   "examples": "%s.csv" % name}, f)
    return dataset_manifest.fromFile(manifest_path)


def toy_tree():
    """
    material -> plastic -> bag, material -> paper, animal -> dog
    """
    graph = concept_graph()
    for cid in ["material", "plastic", "bag", "paper", "animal", "dog"]:
        graph.upsert_concept(concept(cid))
    graph.upsert_edge(relation_edge("plastic", "material", IS_A))
    graph.upsert_edge(relation_edge("bag", "plastic", IS_A))
    graph.upsert_edge(relation_edge("paper", "material", IS_A))
    graph.upsert_edge(relation_edge("dog", "animal", IS_A))
    return graph


TOY_WORDS = {
    "material": [1.0, 0.2, 0.0],
    "plastic": [0.9, 0.5, 0.1],
    "bag": [0.8, 0.6, 0.0],
    "paper": [1.0, 0.0, 0.3],
    "animal": [0.0, 0.1, 1.0],
    "dog": [0.1, 0.0, 0.9],
}


@pytest.fixture
def tree_graph():
    return toy_tree()


@pytest.fixture
def toy_words():
    return embedding_store(TOY_WORDS)


@pytest.fixture
def installed_tree(tmp_path):
    """
    Toy tree with 4 two-dimensional examples on every concept
    """
    graph = toy_tree()
    rng = np.random.default_rng(7)
    per_class = dict((cid, rng.standard_normal((4, 2)).tolist())
                     for cid in graph.concept_ids())
    manifest = write_dataset(tmp_path, "toy", per_class)
    graph.install_dataset(manifest)
    return graph


def random_forest_graph(rng, n):
    """
    Random is-a forest over n concepts named c0..c(n-1)
    """
    graph = concept_graph()
    for i in range(n):
        graph.upsert_concept(concept("c%d" % i))
    for i in range(1, n):
        if rng.random() < 0.8:
            parent = int(rng.integers(0, i))
            graph.upsert_edge(relation_edge("c%d" % i, "c%d" % parent,
                                            IS_A))
    return graph


class gaussian_task(object):
    """
    In-memory task: C Gaussian classes, N auxiliary concepts per class whose
    means sit at the class mean when rho = 1
    """
    def __init__(self, seed, classes=5, dim=16, n_related=3, per_concept=40,
                 shots=1, unlabeled=200, test_per_class=60, rho=1.0,
                 separation=0.6):
        from taglets.lib.exampleio import example_set
        from taglets.lib.selection import selection_request, aux_selection

        rng = np.random.default_rng(seed)
        means = separation * rng.standard_normal((classes, dim))
        self.targets = [("class_%d" % c, "class_%d" % c)
                        for c in range(classes)]

        rows = []
        labels = []
        related = {}
        for c, (name, _) in enumerate(self.targets):
            related[name] = []
            for r in range(n_related):
                mean = rho * means[c] + (1 - rho) * separation * \
                    rng.standard_normal(dim)
                rows.append(mean + rng.standard_normal((per_concept, dim)))
                labels.extend([c * n_related + r] * per_concept)
                related[name].append(("%s_aux_%d" % (name, r), 1.0))
        request = selection_request(self.targets, n_related, per_concept)
        self.selection = aux_selection(
            request, related, example_set(np.vstack(rows), labels))

        def draw(y):
            y = np.asarray(y, dtype=np.int64)
            return example_set(means[y] + rng.standard_normal((len(y), dim)),
                               y, dimension=dim)

        self.labeled = draw(np.repeat(np.arange(classes), shots))
        self.unlabeled = example_set(
            draw(rng.integers(0, classes, size=unlabeled)).features)
        self.test = draw(np.repeat(np.arange(classes), test_per_class))
