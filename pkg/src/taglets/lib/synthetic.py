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
Synthetic task generator

C Gaussian target classes in d dimensions and a concept graph of
auxiliary concepts whose cluster means sit at the target means when
rho = 1 and at random means when rho = 0. Per target class c:

    entity -is-a-> group_c -is-a-> class_c -is-a-> class_c_child_j
                   group_c -is-a-> class_c_sibling_j
    entity -is-a-> misc -is-a-> distant_j

Children and siblings also carry related-to edges to class_c. One child
per class has no word vector, so retrofitting has to place it.
"""
import os
import json

import numpy as np

from taglets.lib.errors import InvalidSpec
from taglets.lib.exampleio import example_set, write_examples_csv
from taglets.lib.embeddings import embedding_store, save_embeddings
from taglets.lib.scadsgraph import (concept, relation_edge, concept_graph,
                                    dataset_manifest, save_graph, IS_A)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_synthetic')

RELATED_TO = "related-to"
AUX_DATASET = "synthetic_aux"


class synthetic_spec(object):
    def __init__(self,
                 seed=0,
                 classes=5,
                 dim=16,
                 shots=1,
                 unlabeled=500,
                 rho=1.0,
                 test_per_class=100,
                 per_concept=100,
                 children=6,
                 siblings=6,
                 distant=10,
                 word_dim=8,
                 separation=0.6,
                 noise=1.0,
                 sibling_jitter=0.3):
        self.seed = seed
        self.classes = classes
        self.dim = dim
        self.shots = shots
        self.unlabeled = unlabeled
        self.rho = rho
        self.test_per_class = test_per_class
        self.per_concept = per_concept
        self.children = children
        self.siblings = siblings
        self.distant = distant
        self.word_dim = word_dim
        self.separation = separation
        self.noise = noise
        self.sibling_jitter = sibling_jitter
        self.validate()

    def validate(self):
        checks = [
            (isinstance(self.classes, int) and self.classes >= 2,
             "classes must be >= 2"),
            (isinstance(self.dim, int) and self.dim >= 2, "dim must be >= 2"),
            (isinstance(self.shots, int) and self.shots >= 0,
             "shots must be >= 0"),
            (isinstance(self.unlabeled, int) and self.unlabeled >= 0,
             "unlabeled must be >= 0"),
            (0.0 <= self.rho <= 1.0, "rho must lie in [0, 1]"),
            (self.test_per_class >= 1, "test_per_class must be >= 1"),
            (self.per_concept >= 1, "per_concept must be >= 1"),
            (self.children >= 1, "children must be >= 1"),
            (self.siblings >= 0 and self.distant >= 0,
             "siblings and distant must be >= 0"),
            (self.word_dim >= 2, "word_dim must be >= 2"),
            (self.separation > 0 and self.noise > 0,
             "separation and noise must be > 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidSpec(message)

    def toDict(self):
        return dict(self.__dict__)

    def __repr__(self):
        return "<synthetic_spec seed(%d) C(%d) d(%d) shots(%d) rho(%s)>" % \
            (self.seed, self.classes, self.dim, self.shots, self.rho)


class synthetic_task(object):
    def __init__(self, spec, graph, words, manifests, labeled, unlabeled,
                 test, targets, config_path):
        self.spec = spec
        self.graph = graph
        self.words = words
        self.manifests = manifests
        self.labeled = labeled
        self.unlabeled = unlabeled
        self.test = test
        self.targets = targets
        self.config_path = config_path

    def __repr__(self):
        return "<synthetic_task %r %s>" % (self.spec, self.config_path)


def _unit(rng, m):
    v = rng.standard_normal(m)
    return v / np.linalg.norm(v)


def _near(rng, base, spread):
    v = base + spread * rng.standard_normal(base.shape[0])
    return v / np.linalg.norm(v)


def _class_name(c):
    return "class_%d" % c


def generate_synthetic_task(spec, out_dir):
    """
    Write every artifact of a synthetic task to out_dir and return it with
    the auxiliary dataset installed into its graph
    """
    if not isinstance(spec, synthetic_spec):
        raise InvalidSpec("expected a synthetic_spec")
    logger.info("generate_synthetic_task - %r -> %s" % (spec, out_dir))
    os.makedirs(out_dir, exist_ok=True)

    rng = np.random.default_rng(spec.seed)
    C, d, m = spec.classes, spec.dim, spec.word_dim
    means = spec.separation * rng.standard_normal((C, d))

    def aux_mean(anchor):
        random_mean = spec.separation * rng.standard_normal(d)
        return spec.rho * anchor + (1.0 - spec.rho) * random_mean

    graph = concept_graph()
    words = {}
    aux_means = {}

    def add(cid, word=None):
        graph.upsert_concept(concept(cid, cid.replace("_", " ")))
        if word is not None:
            words[cid] = word

    add("entity", _unit(rng, m))
    add("misc", _unit(rng, m))
    graph.upsert_edge(relation_edge("misc", "entity", IS_A))

    targets = []
    for c in range(C):
        name = _class_name(c)
        group = "group_%d" % c
        u = _unit(rng, m)
        add(group, _near(rng, u, 0.2))
        add(name, u)
        graph.upsert_edge(relation_edge(group, "entity", IS_A))
        graph.upsert_edge(relation_edge(name, group, IS_A))
        aux_means[name] = aux_mean(means[c])
        targets.append((name, name))

        for j in range(spec.children):
            child = "%s_child_%d" % (name, j)
            # the first child is out of vocabulary
            add(child, None if j == 0 else _near(rng, u, 0.1))
            graph.upsert_edge(relation_edge(child, name, IS_A))
            graph.upsert_edge(relation_edge(child, name, RELATED_TO, 1.0))
            aux_means[child] = aux_mean(means[c])

        for j in range(spec.siblings):
            sibling = "%s_sibling_%d" % (name, j)
            add(sibling, _near(rng, u, 0.3))
            graph.upsert_edge(relation_edge(sibling, group, IS_A))
            graph.upsert_edge(relation_edge(sibling, name, RELATED_TO, 0.5))
            jitter = spec.sibling_jitter * spec.separation * \
                rng.standard_normal(d)
            aux_means[sibling] = aux_mean(means[c] + jitter)

    for j in range(spec.distant):
        distant = "distant_%d" % j
        add(distant, _unit(rng, m))
        graph.upsert_edge(relation_edge(distant, "misc", IS_A))
        aux_means[distant] = spec.separation * rng.standard_normal(d)

    word_store = embedding_store(words, dimension=m)

    # auxiliary examples, one manifest class per concept
    aux_names = []
    aux_rows = []
    for cid, mean in aux_means.items():
        rows = mean + spec.noise * rng.standard_normal((spec.per_concept, d))
        aux_names.extend([cid] * spec.per_concept)
        aux_rows.append(rows)
    aux_csv = os.path.join(out_dir, "aux.csv")
    write_examples_csv(aux_csv, np.vstack(aux_rows), names=aux_names)
    manifest_path = os.path.join(out_dir, "aux_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump({"name": AUX_DATASET,
                   "classes": dict((cid, cid) for cid in aux_means),
                   "examples": "aux.csv"}, f, indent=2)
        f.write("\n")

    def draw(labels):
        labels = np.asarray(labels, dtype=np.int64)
        X = means[labels] + spec.noise * rng.standard_normal(
            (labels.shape[0], d))
        return example_set(X, labels, dimension=d)

    labeled = draw(np.repeat(np.arange(C), spec.shots))
    unlabeled_truth = draw(rng.integers(0, C, size=spec.unlabeled))
    unlabeled = example_set(unlabeled_truth.features, dimension=d)
    test = draw(np.repeat(np.arange(C), spec.test_per_class))

    class_names = [name for name, _ in targets]
    graph_path = os.path.join(out_dir, "graph.jsonl")
    save_graph(graph, graph_path)
    save_embeddings(word_store, os.path.join(out_dir, "words.tsv"))
    write_examples_csv(os.path.join(out_dir, "labeled.csv"),
                       labeled.features,
                       names=[class_names[y] for y in labeled.labels])
    write_examples_csv(os.path.join(out_dir, "unlabeled.csv"),
                       unlabeled.features)
    write_examples_csv(os.path.join(out_dir, "test.csv"), test.features,
                       names=[class_names[y] for y in test.labels])

    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump({
            "seed": spec.seed,
            "graph": "graph.jsonl",
            "words": "words.tsv",
            "manifests": ["aux_manifest.json"],
            "labeled": "labeled.csv",
            "unlabeled": "unlabeled.csv",
            "test": "test.csv",
            "classes": [{"name": name, "concept": cid}
                        for name, cid in targets],
            "per_concept": spec.per_concept,
        }, f, indent=2)
        f.write("\n")

    # save_graph froze the written graph; install into a fresh copy
    installed = _thawed_copy(graph)
    manifest = dataset_manifest.fromFile(manifest_path)
    installed.install_dataset(manifest)

    return synthetic_task(spec, installed, word_store, [manifest], labeled,
                          unlabeled, test, targets, config_path)


def _thawed_copy(graph):
    copy = concept_graph()
    for cpt in graph.concepts():
        copy.upsert_concept(cpt)
    for edge in graph.edges():
        copy.upsert_edge(edge)
    return copy
