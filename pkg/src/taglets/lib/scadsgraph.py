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
SCADS concept graph

Concepts are networkx nodes, relations are keyed multi-edges
(src, dst, relation) and installed datasets attach their examples to the
concept nodes their classes map to.
"""
import os
import json
import hashlib
import threading

import numpy as np
import networkx as nx

from taglets.lib.errors import (TagletsError, InvalidConcept, UnknownConcept,
                                UnknownDataset, InvalidWeight, MalformedData,
                                InvalidHierarchy, GraphFrozen, ShapeError)
from taglets.lib.exampleio import labeled_example, read_examples_csv
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_scads_graph')

IS_A = "is-a"
GRAPH_SCHEMA = 1


class prune_level(object):
    NONE = "none"
    LEVEL0 = "0"
    LEVEL1 = "1"

    ALL = [NONE, LEVEL0, LEVEL1]

    @classmethod
    def parse(cls, level):
        if level is None:
            return cls.NONE
        value = str(level).strip().lower()
        if value not in cls.ALL:
            raise ValueError("prune level must be one of %s, got %r" %
                             (cls.ALL, level))
        return value


class concept(object):
    def __init__(self, id=None, name=None, aliases=None):
        self.id = id
        self.name = name if name is not None else id
        self.aliases = list(aliases or [])

    def __eq__(self, other):
        return self.__dict__ == other.__dict__

    def __repr__(self):
        return "<concept %s %s>" % (self.id, self.name)

    def toDict(self):
        return {"type": "concept", "id": self.id, "name": self.name,
                "aliases": list(self.aliases)}


class relation_edge(object):
    def __init__(self, src=None, dst=None, relation=IS_A, weight=1.0):
        self.src = src
        self.dst = dst
        self.relation = relation
        self.weight = weight

    def __eq__(self, other):
        return self.__dict__ == other.__dict__

    def __repr__(self):
        return "<relation_edge %s -%s-> %s %s>" % \
            (self.src, self.relation, self.dst, self.weight)

    def toDict(self):
        return {"type": "edge", "src": self.src, "dst": self.dst,
                "relation": self.relation, "weight": self.weight}


class dataset_manifest(object):
    """
    Dataset name, class name -> concept id map and the feature CSV path
    """
    def __init__(self, name=None, classes=None, examples=None):
        self.name = name
        self.classes = dict(classes or {})
        self.examples = examples

    def __eq__(self, other):
        return self.__dict__ == other.__dict__

    def __repr__(self):
        return "<dataset_manifest %s classes(%d) %s>" % \
            (self.name, len(self.classes), self.examples)

    def class_names(self):
        return list(self.classes.keys())

    def toDict(self):
        return {"name": self.name, "classes": dict(self.classes),
                "examples": self.examples}

    @classmethod
    def fromFile(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            try:
                msg = json.load(f)
            except ValueError as e:
                raise MalformedData("manifest is not JSON - %s" % e,
                                    path=path)

        for key in ["name", "classes", "examples"]:
            if key not in msg:
                raise MalformedData("manifest has no %s" % key, path=path)

        examples = msg["examples"]
        if not os.path.isabs(examples):
            examples = os.path.join(
                os.path.dirname(os.path.abspath(path)), examples)
        return cls(msg["name"], msg["classes"], examples)


class concept_graph(object):
    """
    Mutable during the build phase, read-only after freeze()
    """
    def __init__(self):
        self.graph = nx.MultiDiGraph()
        # concept id -> list of (dataset name, labeled_example)
        self._examples = {}
        # dataset name -> dataset_manifest, in install order
        self._datasets = {}
        self.dimension = None
        self.frozen = False
        self._edge_seq = 0
        self.lock = threading.RLock()

    def _get_lock(self):
        return self.lock

    def _check_mutable(self):
        if self.frozen:
            raise GraphFrozen("graph is frozen")

    def freeze(self):
        self.frozen = True
        return self

    def __repr__(self):
        return "<concept_graph concepts(%d) edges(%d) datasets(%d)>" % \
            (self.graph.number_of_nodes(), self.graph.number_of_edges(),
             len(self._datasets))

    def __len__(self):
        return self.graph.number_of_nodes()

    def __contains__(self, concept_id):
        return concept_id in self.graph

    """
    Build operations
    """
    def upsert_concept(self, cpt):
        if not isinstance(cpt.id, str) or not cpt.id:
            raise InvalidConcept("concept id must be a non-empty string")

        with self._get_lock():
            self._check_mutable()
            if cpt.id in self.graph:
                logger.debug("upsert_concept - replace %s" % cpt.id)
                node = self.graph.nodes[cpt.id]
                node["name"] = cpt.name
                node["aliases"] = list(cpt.aliases)
            else:
                logger.debug("upsert_concept - insert %s" % cpt.id)
                self.graph.add_node(cpt.id, name=cpt.name,
                                    aliases=list(cpt.aliases))
                self._examples[cpt.id] = []
        return self

    def upsert_edge(self, edge):
        for endpoint in [edge.src, edge.dst]:
            if endpoint not in self.graph:
                raise UnknownConcept("no such concept: %s" % endpoint)

        try:
            weight = float(edge.weight)
        except (TypeError, ValueError):
            raise InvalidWeight("edge weight is not a number: %r" %
                                edge.weight)
        if not np.isfinite(weight) or weight < 0:
            raise InvalidWeight("edge weight must be finite and >= 0: %r" %
                                edge.weight)

        with self._get_lock():
            self._check_mutable()
            if edge.relation == IS_A:
                parent = self.parent(edge.src)
                if parent is not None and parent != edge.dst:
                    raise InvalidHierarchy(
                        "%s already is-a %s, cannot add parent %s" %
                        (edge.src, parent, edge.dst))

            logger.debug("upsert_edge - %s %s %s %f" %
                         (edge.src, edge.relation, edge.dst, weight))
            if self.graph.has_edge(edge.src, edge.dst, key=edge.relation):
                seq = self.graph.edges[edge.src, edge.dst,
                                       edge.relation]["seq"]
            else:
                seq = self._edge_seq
                self._edge_seq += 1
            self.graph.add_edge(edge.src, edge.dst, key=edge.relation,
                                weight=weight, seq=seq)
        return self

    def install_dataset(self, manifest):
        logger.info("install_dataset - %s" % manifest.name)

        with self._get_lock():
            self._check_mutable()
            if manifest.name in self._datasets:
                raise MalformedData("dataset already installed: %s" %
                                    manifest.name)

            for class_name, concept_id in manifest.classes.items():
                if concept_id not in self.graph:
                    raise UnknownConcept(
                        "class %s maps to unknown concept %s" %
                        (class_name, concept_id))

            names, features = read_examples_csv(manifest.examples)
            if names is None:
                raise MalformedData("examples file has no class column",
                                    line=1, path=manifest.examples)
            if self.dimension is not None and len(names) > 0 and \
                    features.shape[1] != self.dimension:
                raise ShapeError("dataset %s has dimension %d, graph has %d" %
                                 (manifest.name, features.shape[1],
                                  self.dimension))

            class_index = dict((name, i) for i, name in
                               enumerate(manifest.class_names()))
            attached = []
            for row, (name, x) in enumerate(zip(names, features)):
                if name not in class_index:
                    raise MalformedData("class %s is not in the manifest" %
                                        name, line=row + 2,
                                        path=manifest.examples)
                attached.append((manifest.classes[name],
                                 labeled_example(x, class_index[name])))

            for concept_id, example in attached:
                self._examples[concept_id].append((manifest.name, example))
            if attached and self.dimension is None:
                self.dimension = features.shape[1]
            self._datasets[manifest.name] = manifest

        logger.info("install_dataset - %s: %d examples attached" %
                    (manifest.name, len(attached)))
        return self

    def remove_dataset(self, name):
        logger.info("remove_dataset - %s" % name)

        with self._get_lock():
            self._check_mutable()
            if name not in self._datasets:
                raise UnknownDataset("no such dataset: %s" % name)

            for concept_id in self._examples:
                self._examples[concept_id] = [
                    item for item in self._examples[concept_id]
                    if item[0] != name]
            del self._datasets[name]
        return self

    def _attach(self, dataset_name, concept_id, example):
        # used by load_graph
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        if self.dimension is None:
            self.dimension = example.features.shape[0]
        elif example.features.shape[0] != self.dimension:
            raise ShapeError("example has dimension %d, graph has %d" %
                             (example.features.shape[0], self.dimension))
        self._examples[concept_id].append((dataset_name, example))

    """
    Queries
    """
    def concept(self, concept_id):
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        node = self.graph.nodes[concept_id]
        return concept(concept_id, node.get("name"), node.get("aliases"))

    def concepts(self):
        return [self.concept(cid) for cid in self.graph.nodes]

    def concept_ids(self):
        return list(self.graph.nodes)

    def edges(self):
        """
        Edges in insertion order, an upsert keeps the original position
        """
        ordered = sorted(self.graph.edges(keys=True, data=True),
                         key=lambda e: e[3]["seq"])
        return [relation_edge(src, dst, relation, data["weight"])
                for src, dst, relation, data in ordered]

    def degree(self, concept_id):
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        return self.graph.degree(concept_id)

    def neighbors(self, concept_id):
        """
        (neighbor, weight) for every incident edge, either direction
        """
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        found = []
        for _, dst, data in self.graph.out_edges(concept_id, data=True):
            if dst != concept_id:
                found.append((dst, data["weight"]))
        for src, _, data in self.graph.in_edges(concept_id, data=True):
            if src != concept_id:
                found.append((src, data["weight"]))
        return found

    def parent(self, concept_id):
        for _, dst, relation in self.graph.out_edges(concept_id, keys=True):
            if relation == IS_A:
                return dst
        return None

    def children(self, concept_id):
        return [src for src, _, relation in
                self.graph.in_edges(concept_id, keys=True)
                if relation == IS_A]

    def datasets(self):
        return list(self._datasets.values())

    def example_count(self, concept_id):
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        return len(self._examples[concept_id])

    def examples_for_concept(self, concept_id, limit, seed=0):
        """
        Up to limit examples of a concept; a seeded uniform sample without
        replacement when more are available, kept in insertion order
        """
        if concept_id not in self.graph:
            raise UnknownConcept("no such concept: %s" % concept_id)
        if int(limit) < 1:
            raise ValueError("limit must be a positive integer")

        items = self._examples[concept_id]
        if len(items) <= limit:
            return [example for _, example in items]

        rng = np.random.default_rng(_concept_seed(seed, concept_id))
        picked = np.sort(rng.choice(len(items), size=int(limit),
                                    replace=False))
        return [items[i][1] for i in picked]

    def hierarchy(self):
        """
        parent -> child DiGraph of the is-a edges
        """
        tree = nx.DiGraph()
        tree.add_nodes_from(self.graph.nodes)
        for src, dst, relation in self.graph.edges(keys=True):
            if relation == IS_A:
                tree.add_edge(dst, src)
        return tree

    def prune_candidates(self, targets, level=prune_level.NONE):
        level = prune_level.parse(level)
        for target in targets:
            if target not in self.graph:
                raise UnknownConcept("no such concept: %s" % target)

        candidates = set(cid for cid in self.graph.nodes
                         if self._examples[cid])
        tree = self.hierarchy()
        if not nx.is_directed_acyclic_graph(tree):
            raise InvalidHierarchy("is-a edges contain a cycle: %s" %
                                   nx.find_cycle(tree))
        if level == prune_level.NONE:
            return candidates

        removed = set()
        for target in targets:
            removed.add(target)
            removed.update(nx.descendants(tree, target))
            if level == prune_level.LEVEL1:
                parent = self.parent(target)
                if parent is not None:
                    removed.add(parent)
                    removed.update(nx.descendants(tree, parent))

        logger.debug("prune_candidates - level %s removed %d of %d" %
                     (level, len(candidates & removed), len(candidates)))
        return candidates - removed


def _concept_seed(seed, concept_id):
    digest = hashlib.sha256(("%s/%s" % (seed, concept_id)).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big")


"""
Persistence: newline-delimited JSON
"""


def _records(graph, embeddings=None):
    yield {"type": "header", "schema": GRAPH_SCHEMA,
           "dimension": graph.dimension}
    for cpt in graph.concepts():
        yield cpt.toDict()
    for edge in graph.edges():
        yield edge.toDict()

    n_examples = 0
    for manifest in graph.datasets():
        record = manifest.toDict()
        record["type"] = "dataset"
        yield record
        for concept_id in graph.concept_ids():
            for dataset_name, example in graph._examples[concept_id]:
                if dataset_name != manifest.name:
                    continue
                n_examples += 1
                yield {"type": "example", "dataset": dataset_name,
                       "concept": concept_id, "label": example.label,
                       "features": example.features.tolist()}

    n_embeddings = 0
    if embeddings is not None:
        for term in embeddings.terms():
            n_embeddings += 1
            yield {"type": "embedding", "kind": embeddings.kind,
                   "term": term, "vector": embeddings[term].tolist()}

    yield {"type": "end", "concepts": len(graph),
           "edges": graph.graph.number_of_edges(),
           "examples": n_examples, "embeddings": n_embeddings}


def save_graph(graph, path, embeddings=None):
    """
    Write the graph (and optionally its scads embeddings) and freeze it
    """
    logger.info("save_graph - %s" % path)

    graph.freeze()
    tmp_path = "%s.part" % path
    with open(tmp_path, "w", encoding="utf-8") as f:
        for record in _records(graph, embeddings):
            f.write(json.dumps(record, ensure_ascii=False))
            f.write("\n")
    os.replace(tmp_path, path)


RECORD_TYPES = ["header", "concept", "edge", "dataset", "example",
                "embedding", "end"]

# records may precede the concepts and datasets they name
_LOAD_PHASES = [["header", "concept", "end"], ["edge", "dataset"],
                ["example", "embedding"]]


def _read_records(path):
    """
    (line number, record) of every non-blank line, decoded strictly
    """
    records = []
    footer_line = None
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, 1):
            try:
                line = raw.decode("utf-8")
                if not line.strip():
                    continue
                if footer_line is not None:
                    raise MalformedData("data after end record")
                record = json.loads(line)
                if record.get("type") not in RECORD_TYPES:
                    raise MalformedData("unknown record type %r" %
                                        record.get("type"))
            except MalformedData as e:
                raise MalformedData(e.value, line=line_no, path=path)
            except (ValueError, AttributeError) as e:
                # UnicodeDecodeError is a ValueError
                raise MalformedData("%s: %s" % (e.__class__.__name__, e),
                                    line=line_no, path=path)
            if record["type"] == "end":
                footer_line = line_no
            records.append((line_no, record))
    return records


def _load(path):
    from taglets.lib.embeddings import embedding_store

    graph = concept_graph()
    state = {"header": None, "footer": None, "kind": None}
    vectors = {}

    def apply(record):
        rtype = record["type"]
        if rtype == "header":
            state["header"] = record
        elif rtype == "end":
            state["footer"] = record
        elif rtype == "concept":
            graph.upsert_concept(concept(record["id"], record.get("name"),
                                         record.get("aliases")))
        elif rtype == "edge":
            graph.upsert_edge(relation_edge(
                record["src"], record["dst"], record["relation"],
                record.get("weight", 1.0)))
        elif rtype == "dataset":
            graph._datasets[record["name"]] = dataset_manifest(
                record["name"], record["classes"], record["examples"])
        elif rtype == "example":
            if record["dataset"] not in graph._datasets:
                raise MalformedData("example of unknown dataset %s" %
                                    record["dataset"])
            graph._attach(record["dataset"], record["concept"],
                          labeled_example(record["features"],
                                          record["label"]))
        else:
            state["kind"] = record.get("kind", state["kind"])
            vectors[record["term"]] = record["vector"]

    records = _read_records(path)
    for phase in _LOAD_PHASES:
        for line_no, record in records:
            if record["type"] not in phase:
                continue
            try:
                apply(record)
            except TagletsError as e:
                raise MalformedData("%s: %s" % (e.__class__.__name__,
                                                e.value),
                                    line=line_no, path=path)
            except (ValueError, KeyError, TypeError) as e:
                raise MalformedData("%s: %s" % (e.__class__.__name__, e),
                                    line=line_no, path=path)

    header, footer = state["header"], state["footer"]
    if header is not None:
        if footer is None:
            raise MalformedData("file is truncated, no end record",
                                line=records[-1][0], path=path)
        if footer["concepts"] != len(graph) or \
                footer["edges"] != graph.graph.number_of_edges():
            raise MalformedData("end record does not match contents",
                                path=path)
        if header.get("dimension") is not None:
            graph.dimension = header["dimension"]

    store = None
    if vectors:
        store = embedding_store(vectors, kind=state["kind"] or "scads")
    return graph, store


def load_graph(path):
    logger.info("load_graph - %s" % path)
    graph, _ = _load(path)
    return graph


def load_scads(path):
    """
    Returns (graph, scads embedding store) of a SCADS database file
    """
    logger.info("load_scads - %s" % path)
    graph, store = _load(path)
    if store is None:
        raise MalformedData("no scads embeddings in %s" % path, path=path)
    return graph, store
