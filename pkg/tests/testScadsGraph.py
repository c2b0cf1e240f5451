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
Concept graph test
"""

import os

import numpy as np
import pytest

from conftest import write_dataset, toy_tree, random_forest_graph
from taglets.lib.errors import (InvalidConcept, UnknownConcept,
                                UnknownDataset, InvalidWeight, MalformedData,
                                InvalidHierarchy, GraphFrozen)
from taglets.lib.embeddings import embedding_store
from taglets.lib.scadsgraph import (concept, relation_edge, concept_graph,
                                    dataset_manifest, prune_level, IS_A,
                                    save_graph, load_graph, load_scads)


def test_upsert_new_concept_has_degree_zero(tree_graph):
    tree_graph.upsert_concept(concept("oatghurt"))
    assert "oatghurt" in tree_graph
    assert tree_graph.degree("oatghurt") == 0


def test_upsert_existing_concept_keeps_count_and_edges(tree_graph):
    before = len(tree_graph)
    tree_graph.upsert_concept(concept("plastic", "plastic",
                                      ["polymer"]))
    assert len(tree_graph) == before
    assert tree_graph.concept("plastic").aliases == ["polymer"]
    assert tree_graph.parent("plastic") == "material"
    assert tree_graph.children("plastic") == ["bag"]


def test_upsert_empty_id_fails(tree_graph):
    with pytest.raises(InvalidConcept):
        tree_graph.upsert_concept(concept(""))


def test_link_new_concept():
    graph = concept_graph()
    for cid in ["oatghurt", "yoghurt", "carton", "oat milk"]:
        graph.upsert_concept(concept(cid))
    for dst in ["yoghurt", "carton", "oat milk"]:
        graph.upsert_edge(relation_edge("oatghurt", dst, "related-to"))
    assert graph.degree("oatghurt") == 3
    assert sorted(n for n, _ in graph.neighbors("oatghurt")) == \
        ["carton", "oat milk", "yoghurt"]
    assert graph.neighbors("carton") == [("oatghurt", 1.0)]


def test_edge_to_missing_concept(tree_graph):
    with pytest.raises(UnknownConcept):
        tree_graph.upsert_edge(relation_edge("dog", "zzz", "related-to"))


def test_duplicate_edge_overwrites_weight(tree_graph):
    tree_graph.upsert_edge(relation_edge("dog", "bag", "related-to", 1.0))
    count = len(tree_graph.edges())
    tree_graph.upsert_edge(relation_edge("dog", "bag", "related-to", 2.0))
    assert len(tree_graph.edges()) == count
    weights = [e.weight for e in tree_graph.edges()
               if (e.src, e.dst, e.relation) == ("dog", "bag", "related-to")]
    assert weights == [2.0]


@pytest.mark.parametrize("weight", [-1.0, float("nan"), "heavy"])
def test_bad_weight(tree_graph, weight):
    with pytest.raises(InvalidWeight):
        tree_graph.upsert_edge(relation_edge("dog", "bag", "related-to",
                                             weight))


def test_second_parent_is_rejected(tree_graph):
    with pytest.raises(InvalidHierarchy):
        tree_graph.upsert_edge(relation_edge("bag", "animal", IS_A))
    # re-adding the same parent is an overwrite
    tree_graph.upsert_edge(relation_edge("bag", "plastic", IS_A, 3.0))


def test_install_attaches_examples(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1", {
        "plastic": [[1.0, 0.0], [1.1, 0.0], [1.2, 0.0]],
        "dog": [[0.0, 1.0], [0.0, 1.1], [0.0, 1.2]],
    })
    tree_graph.install_dataset(manifest)
    assert len(tree_graph.examples_for_concept("plastic", 3)) == 3
    assert len(tree_graph.examples_for_concept("dog", 3)) == 3
    assert tree_graph.dimension == 2
    assert [m.name for m in tree_graph.datasets()] == ["d1"]


def test_install_maps_class_names_to_concepts(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1",
                             {"puppy": [[0.0, 1.0]], "sack": [[1.0, 0.0]]},
                             classes={"puppy": "dog", "sack": "bag"})
    tree_graph.install_dataset(manifest)
    assert tree_graph.example_count("dog") == 1
    assert tree_graph.example_count("bag") == 1


def test_install_then_remove_restores_counts(tmp_path, installed_tree):
    ids = installed_tree.concept_ids()
    before = dict((cid, installed_tree.example_count(cid)) for cid in ids)
    manifest = write_dataset(tmp_path, "extra", {
        "paper": [[5.0, 5.0], [6.0, 6.0]],
        "dog": [[7.0, 7.0]],
    })
    installed_tree.install_dataset(manifest)
    assert installed_tree.example_count("paper") == before["paper"] + 2
    installed_tree.remove_dataset("extra")
    after = dict((cid, installed_tree.example_count(cid)) for cid in ids)
    assert after == before
    for cid in ids:
        for k in [1, 2, 3, 4, 10]:
            assert len(installed_tree.examples_for_concept(cid, k)) == \
                min(k, before[cid])


def test_install_unknown_concept(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1", {"oatghurt": [[1.0, 2.0]]})
    with pytest.raises(UnknownConcept):
        tree_graph.install_dataset(manifest)
    assert tree_graph.datasets() == []


def test_install_ragged_csv(tmp_path, tree_graph):
    csv_path = os.path.join(str(tmp_path), "ragged.csv")
    with open(csv_path, "w") as f:
        f.write("class,f1,f2\ndog,1.0,2.0\ndog,1.0\n")
    manifest = dataset_manifest("ragged", {"dog": "dog"}, csv_path)
    with pytest.raises(MalformedData) as e:
        tree_graph.install_dataset(manifest)
    assert e.value.line == 3
    assert tree_graph.example_count("dog") == 0


def test_install_csv_not_utf8(tmp_path, tree_graph):
    csv_path = os.path.join(str(tmp_path), "latin1.csv")
    with open(csv_path, "wb") as f:
        f.write(b"class,f1\ndog,1.0\n\xff\xfedog,2.0\n")
    manifest = dataset_manifest("latin1", {"dog": "dog"}, csv_path)
    with pytest.raises(MalformedData) as e:
        tree_graph.install_dataset(manifest)
    assert e.value.line == 3
    assert tree_graph.example_count("dog") == 0


def test_install_twice_and_remove_unknown(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1", {"dog": [[1.0, 2.0]]})
    tree_graph.install_dataset(manifest)
    with pytest.raises(MalformedData):
        tree_graph.install_dataset(manifest)
    with pytest.raises(UnknownDataset):
        tree_graph.remove_dataset("d2")


def test_examples_for_concept_limits(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1", {
        "plastic": [[float(i), 0.0] for i in range(5)],
        "dog": [[0.0, 1.0], [0.0, 2.0]],
    })
    tree_graph.install_dataset(manifest)
    assert len(tree_graph.examples_for_concept("plastic", 3)) == 3
    assert len(tree_graph.examples_for_concept("dog", 3)) == 2
    assert tree_graph.examples_for_concept("paper", 3) == []
    with pytest.raises(UnknownConcept):
        tree_graph.examples_for_concept("zzz", 3)


def test_examples_for_concept_is_seeded(tmp_path, tree_graph):
    manifest = write_dataset(tmp_path, "d1", {
        "plastic": [[float(i), 0.0] for i in range(50)]})
    tree_graph.install_dataset(manifest)

    def firsts(seed):
        return [e.features[0] for e in
                tree_graph.examples_for_concept("plastic", 10, seed=seed)]

    assert firsts(3) == firsts(3)
    # sampled rows keep insertion order
    assert firsts(3) == sorted(firsts(3))
    assert any(firsts(s) != firsts(3) for s in range(4, 10))


def test_prune_levels(installed_tree):
    everything = {"material", "plastic", "bag", "paper", "animal", "dog"}
    assert installed_tree.prune_candidates(["plastic"], "none") == everything
    assert installed_tree.prune_candidates(["plastic"], "0") == \
        {"material", "paper", "animal", "dog"}
    assert installed_tree.prune_candidates(["plastic"], "1") == \
        {"animal", "dog"}


def test_prune_only_counts_concepts_with_examples(tmp_path, tree_graph):
    tree_graph.install_dataset(write_dataset(tmp_path, "d1", {
        "bag": [[1.0]], "dog": [[2.0]]}))
    assert tree_graph.prune_candidates(["paper"], prune_level.NONE) == \
        {"bag", "dog"}


def test_prune_unknown_target_and_level(installed_tree):
    with pytest.raises(UnknownConcept):
        installed_tree.prune_candidates(["zzz"], "0")
    with pytest.raises(ValueError):
        installed_tree.prune_candidates(["dog"], "2")


def test_prune_detects_cycle(tmp_path):
    graph = concept_graph()
    for cid in ["a", "b"]:
        graph.upsert_concept(concept(cid))
    graph.upsert_edge(relation_edge("a", "b", IS_A))
    graph.upsert_edge(relation_edge("b", "a", IS_A))
    graph.install_dataset(write_dataset(tmp_path, "d1", {"a": [[1.0]]}))
    for level in prune_level.ALL:
        with pytest.raises(InvalidHierarchy):
            graph.prune_candidates(["a"], level)


def test_prune_nesting_on_random_forests(tmp_path):
    rng = np.random.default_rng(2024)
    for case in range(1000):
        n = int(rng.integers(2, 16))
        graph = random_forest_graph(rng, n)
        holders = [cid for cid in graph.concept_ids() if rng.random() < 0.7]
        if not holders:
            holders = ["c0"]
        manifest = dataset_manifest("d", dict((c, c) for c in holders),
                                    os.path.join(str(tmp_path), "x.csv"))
        with open(manifest.examples, "w") as f:
            f.write("class,f1\n")
            for c in holders:
                f.write("%s,1.0\n" % c)
        graph.install_dataset(manifest)

        targets = list(rng.choice(graph.concept_ids(),
                                  size=int(rng.integers(1, 3)),
                                  replace=False))
        none = graph.prune_candidates(targets, "none")
        level0 = graph.prune_candidates(targets, "0")
        level1 = graph.prune_candidates(targets, "1")
        assert level1 <= level0 <= none
        for t in targets:
            assert (t in none) == (t in holders)
            assert t not in level0
            assert t not in level1


def _queries(graph):
    ids = graph.concept_ids()
    return {
        "concepts": [c.toDict() for c in graph.concepts()],
        "edges": [e.toDict() for e in graph.edges()],
        "parents": [graph.parent(c) for c in ids],
        "children": [graph.children(c) for c in ids],
        "neighbors": [graph.neighbors(c) for c in ids],
        "datasets": [m.toDict() for m in graph.datasets()],
        "examples": [[(e.features.tolist(), e.label) for e in
                      graph.examples_for_concept(c, 3, seed=1)]
                     for c in ids],
        "dimension": graph.dimension,
    }


def test_save_load_round_trip(tmp_path, installed_tree):
    path = os.path.join(str(tmp_path), "g.jsonl")
    before = _queries(installed_tree)
    save_graph(installed_tree, path)
    loaded = load_graph(path)
    assert _queries(loaded) == before
    for level in prune_level.ALL:
        assert loaded.prune_candidates(["plastic"], level) == \
            installed_tree.prune_candidates(["plastic"], level)


def test_save_load_round_trip_random_graphs(tmp_path):
    rng = np.random.default_rng(11)
    path = os.path.join(str(tmp_path), "g.jsonl")
    for case in range(1000):
        graph = random_forest_graph(rng, int(rng.integers(1, 10)))
        ids = graph.concept_ids()
        for _ in range(int(rng.integers(0, 4))):
            src, dst = rng.choice(ids, size=2)
            graph.upsert_edge(relation_edge(str(src), str(dst), "related-to",
                                            float(rng.uniform(0, 2))))
        if rng.random() < 0.5:
            holders = ids[:max(1, len(ids) // 2)]
            manifest = dataset_manifest(
                "d", dict((c, c) for c in holders),
                os.path.join(str(tmp_path), "x.csv"))
            with open(manifest.examples, "w") as f:
                f.write("class,f1,f2\n")
                for c in holders:
                    for _ in range(int(rng.integers(1, 5))):
                        f.write("%s,%r,%r\n" % (c, float(rng.normal()),
                                                float(rng.normal())))
            graph.install_dataset(manifest)
        before = _queries(graph)
        save_graph(graph, path)
        assert _queries(load_graph(path)) == before


def test_save_freezes_graph(tmp_path, tree_graph):
    save_graph(tree_graph, os.path.join(str(tmp_path), "g.jsonl"))
    assert tree_graph.frozen
    with pytest.raises(GraphFrozen):
        tree_graph.upsert_concept(concept("oatghurt"))
    with pytest.raises(GraphFrozen):
        tree_graph.upsert_edge(relation_edge("dog", "bag", "related-to"))


def test_load_truncated_file(tmp_path, installed_tree):
    path = os.path.join(str(tmp_path), "g.jsonl")
    save_graph(installed_tree, path)
    with open(path) as f:
        lines = f.readlines()

    with open(path, "w") as f:
        f.writelines(lines[:-1])
    with pytest.raises(MalformedData):
        load_graph(path)

    with open(path, "w") as f:
        f.writelines(lines[:3])
        f.write(lines[3][:len(lines[3]) // 2])
    with pytest.raises(MalformedData) as e:
        load_graph(path)
    assert e.value.line == 4


def test_empty_graph_round_trip(tmp_path):
    path = os.path.join(str(tmp_path), "g.jsonl")
    save_graph(concept_graph(), path)
    assert len(load_graph(path)) == 0


def test_plain_concept_and_edge_lines_load(tmp_path):
    path = os.path.join(str(tmp_path), "g.jsonl")
    with open(path, "w") as f:
        f.write('{"type":"concept","id":"a","name":"a","aliases":[]}\n')
        f.write('{"type":"concept","id":"b","name":"b","aliases":[]}\n')
        f.write('{"type":"edge","src":"a","dst":"b","relation":"is-a"}\n')
    graph = load_graph(path)
    assert graph.concept_ids() == ["a", "b"]
    assert graph.edges() == [relation_edge("a", "b", IS_A, 1.0)]


def test_scads_database_carries_embeddings(tmp_path, installed_tree):
    path = os.path.join(str(tmp_path), "g.scads")
    store = embedding_store(dict((cid, [float(i), 1.0]) for i, cid in
                                 enumerate(installed_tree.concept_ids())),
                            kind="scads")
    save_graph(installed_tree, path, embeddings=store)
    graph, loaded = load_scads(path)
    assert loaded.terms() == store.terms()
    assert np.array_equal(loaded.matrix, store.matrix)
    assert _queries(graph) == _queries(installed_tree)

    plain = os.path.join(str(tmp_path), "g.jsonl")
    save_graph(toy_tree(), plain)
    with pytest.raises(MalformedData):
        load_scads(plain)


def test_round_trip_keeps_edge_insertion_order(tmp_path):
    graph = concept_graph()
    for cid in ["a", "b", "c"]:
        graph.upsert_concept(concept(cid))
    graph.upsert_edge(relation_edge("c", "a", IS_A))
    graph.upsert_edge(relation_edge("b", "a", IS_A))
    graph.upsert_edge(relation_edge("a", "b", "related-to", 0.5))
    # an upsert keeps the edge where it was
    graph.upsert_edge(relation_edge("c", "a", IS_A, 2.0))
    assert graph.children("a") == ["c", "b"]
    assert [(e.src, e.dst) for e in graph.edges()] == \
        [("c", "a"), ("b", "a"), ("a", "b")]

    path = os.path.join(str(tmp_path), "g.jsonl")
    before = _queries(graph)
    save_graph(graph, path)
    loaded = load_graph(path)
    assert _queries(loaded) == before
    assert loaded.children("a") == ["c", "b"]


def test_edge_lines_may_precede_concept_lines(tmp_path):
    path = os.path.join(str(tmp_path), "g.jsonl")
    with open(path, "w") as f:
        f.write('{"type":"edge","src":"b","dst":"a","relation":"is-a"}\n')
        f.write('{"type":"concept","id":"a","name":"a","aliases":[]}\n')
        f.write('{"type":"concept","id":"b","name":"b","aliases":[]}\n')
    graph = load_graph(path)
    assert graph.concept_ids() == ["a", "b"]
    assert graph.parent("b") == "a"


def test_load_reports_line_of_bad_record(tmp_path):
    path = os.path.join(str(tmp_path), "g.jsonl")
    with open(path, "w") as f:
        f.write('{"type":"concept","id":"a","name":"a","aliases":[]}\n')
        f.write('{"type":"edge","src":"a","dst":"zzz","relation":"is-a"}\n')
    with pytest.raises(MalformedData) as e:
        load_graph(path)
    assert e.value.line == 2

    with open(path, "w") as f:
        f.write('{"type":"concept","id":"a","name":"a","aliases":[]}\n')
        f.write('{"type":"mystery"}\n')
    with pytest.raises(MalformedData) as e:
        load_graph(path)
    assert e.value.line == 2


def test_load_rejects_invalid_utf8(tmp_path):
    path = os.path.join(str(tmp_path), "g.jsonl")
    with open(path, "wb") as f:
        f.write(b'{"type":"concept","id":"a","name":"a","aliases":[]}\n')
        f.write(b'{"type":"concept","id":"\xff\xfe","name":"x"}\n')
    with pytest.raises(MalformedData) as e:
        load_graph(path)
    assert e.value.line == 2
