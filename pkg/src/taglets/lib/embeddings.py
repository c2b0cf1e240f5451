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
Word and scads embeddings: retrofitting over the concept graph,
approximation embeddings for out-of-vocabulary terms and brute-force
top-N cosine retrieval
"""
import os
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from expiringdict import ExpiringDict
from pydantic import BaseModel, ConfigDict, Field, field_validator

from taglets.lib.errors import (MalformedData, ShapeError, MissingWordVector,
                                NoApproximation, DegenerateVector,
                                MissingEmbedding)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_embeddings')

QUERY_CACHE_SIZE = 10000
QUERY_CACHE_TTL = 60     # 60 sec


class embedding_kind(object):
    WORD = "word"
    SCADS = "scads"


class retrofit_mode(object):
    AS_WRITTEN = "as-written"
    CLASSICAL = "classical"


class embedding_store(object):
    """
    Immutable term -> vector map; rows keep insertion order
    """
    def __init__(self, vectors, kind=embedding_kind.WORD, dimension=None):
        self.kind = kind
        self._terms = list(vectors.keys())
        self._index = dict((t, i) for i, t in enumerate(self._terms))

        if self._terms:
            rows = [np.asarray(vectors[t], dtype=np.float64).reshape(-1)
                    for t in self._terms]
            lengths = set(r.shape[0] for r in rows)
            if len(lengths) != 1:
                raise ShapeError("vectors have mixed lengths %s" %
                                 sorted(lengths))
            matrix = np.vstack(rows)
        else:
            matrix = np.zeros((0, dimension or 0), dtype=np.float64)

        if dimension is not None and matrix.shape[1] != dimension:
            raise ShapeError("vectors have length %d, expected %d" %
                             (matrix.shape[1], dimension))
        if not np.all(np.isfinite(matrix)):
            raise MalformedData("embedding contains non-finite values")

        matrix.flags.writeable = False
        self.matrix = matrix
        self._norms = np.linalg.norm(matrix, axis=1)
        self._cache = ExpiringDict(max_len=QUERY_CACHE_SIZE,
                                   max_age_seconds=QUERY_CACHE_TTL)

    def __len__(self):
        return len(self._terms)

    def __contains__(self, term):
        return term in self._index

    def __getitem__(self, term):
        if term not in self._index:
            raise MissingEmbedding("no %s embedding for %s" %
                                   (self.kind, term))
        return self.matrix[self._index[term]]

    def __repr__(self):
        return "<embedding_store %s terms(%d) m(%d)>" % \
            (self.kind, len(self), self.dimension)

    @property
    def dimension(self):
        return self.matrix.shape[1]

    def terms(self):
        return list(self._terms)

    def get(self, term, default=None):
        if term in self._index:
            return self.matrix[self._index[term]]
        return default


"""
TSV files: term<TAB>v1<TAB>...<TAB>vm
"""


def load_embeddings(path, kind=embedding_kind.WORD):
    logger.info("load_embeddings - %s" % path)

    vectors = {}
    dimension = None
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise MalformedData("not UTF-8 - %s" % e, line=line_no,
                                    path=path)
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise MalformedData("expected a term and a vector",
                                    line=line_no, path=path)
            if dimension is None:
                dimension = len(fields) - 1
            elif len(fields) - 1 != dimension:
                raise MalformedData("expected %d values, got %d" %
                                    (dimension, len(fields) - 1),
                                    line=line_no, path=path)
            try:
                vec = [float(v) for v in fields[1:]]
            except ValueError as e:
                raise MalformedData(str(e), line=line_no, path=path)
            if not all(np.isfinite(vec)):
                raise MalformedData("non-finite value", line=line_no,
                                    path=path)
            vectors[fields[0]] = vec

    return embedding_store(vectors, kind=kind, dimension=dimension)


def save_embeddings(store, path):
    logger.info("save_embeddings - %s" % path)

    with open(path, "w", encoding="utf-8") as f:
        for term in store.terms():
            f.write(term)
            for v in store[term]:
                f.write("\t%r" % float(v))
            f.write("\n")


"""
Similarity
"""


def cosine_similarity(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError("vector lengths differ: %d and %d" %
                         (a.shape[0], b.shape[0]))
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateVector("cosine similarity of a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _common_prefix_length(a, b):
    return len(os.path.commonprefix([a, b]))


def approximation_embedding(term, store):
    """
    Vector of term, or the mean vector of the vocabulary terms sharing the
    longest common prefix with it
    """
    if len(store) == 0:
        raise NoApproximation("embedding store is empty")
    if term in store:
        return np.array(store[term])

    best = 0
    matched = []
    for candidate in store.terms():
        length = _common_prefix_length(term, candidate)
        if length > best:
            best = length
            matched = [candidate]
        elif length == best and length > 0:
            matched.append(candidate)

    if best == 0:
        raise NoApproximation("no vocabulary term shares a prefix with %s" %
                              term)

    logger.debug("approximation_embedding - %s from %s" % (term, matched))
    rows = np.vstack([store[t] for t in sorted(matched)])
    return rows.sum(axis=0) / len(matched)


def resolve_vector(query, store):
    if isinstance(query, str):
        return approximation_embedding(query, store)
    vec = np.asarray(query, dtype=np.float64).reshape(-1)
    if vec.shape[0] != store.dimension:
        raise ShapeError("query has length %d, store has %d" %
                         (vec.shape[0], store.dimension))
    return vec


def top_n_related(query, candidates, n, scads):
    """
    The n candidates closest to query by cosine similarity, descending,
    ties broken by ascending concept id
    """
    if int(n) < 1:
        raise ValueError("n must be a positive integer")

    ordered = sorted(candidates)
    if isinstance(query, str):
        query_key = ("term", query)
    else:
        qarr = np.asarray(query, dtype=np.float64)
        query_key = ("vector", qarr.shape, qarr.tobytes())
    cache_key = (query_key, tuple(ordered), int(n))
    cached = scads._cache.get(cache_key)
    if cached is not None:
        return list(cached)

    qvec = resolve_vector(query, scads)
    qnorm = np.linalg.norm(qvec)
    if qnorm == 0:
        raise DegenerateVector("query vector is zero")
    if not ordered:
        return []

    missing = [cid for cid in ordered if cid not in scads]
    if missing:
        raise MissingEmbedding("candidates without scads vectors: %s" %
                               missing[:5])

    rows = np.array([scads._index[cid] for cid in ordered])
    norms = scads._norms[rows]
    if np.any(norms == 0):
        raise DegenerateVector("candidate with a zero vector")
    sims = np.clip((scads.matrix[rows] @ qvec) / (norms * qnorm), -1.0, 1.0)

    order = sorted(range(len(ordered)), key=lambda i: (-sims[i], ordered[i]))
    result = [(ordered[i], float(sims[i])) for i in order[:int(n)]]
    scads._cache[cache_key] = tuple(result)
    return result


"""
Retrofitting
"""


class retrofit_config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # concept id -> alpha; missing ids default to 1 in-vocabulary, 0 not
    alpha: Optional[Dict[str, float]] = None
    mode: str = retrofit_mode.AS_WRITTEN
    max_iterations: int = Field(default=100, ge=1)
    tolerance: float = Field(default=1e-9, gt=0)

    @field_validator("alpha")
    @classmethod
    def _alpha_non_negative(cls, value):
        if value is not None:
            for cid, a in value.items():
                if not np.isfinite(a) or a < 0:
                    raise ValueError("alpha of %s must be >= 0" % cid)
        return value

    @field_validator("mode")
    @classmethod
    def _known_mode(cls, value):
        if value not in [retrofit_mode.AS_WRITTEN, retrofit_mode.CLASSICAL]:
            raise ValueError("unknown retrofit mode %s" % value)
        return value


def _adjacency(graph, ids):
    index = dict((cid, i) for i, cid in enumerate(ids))
    rows, cols, data = [], [], []
    for edge in graph.edges():
        if edge.src == edge.dst:
            continue
        i, j = index[edge.src], index[edge.dst]
        rows.extend([i, j])
        cols.extend([j, i])
        data.extend([edge.weight, edge.weight])
    n = len(ids)
    # duplicate (i, j) entries are summed
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n),
                         dtype=np.float64)


def retrofit(graph, words, cfg=None):
    """
    Scads embeddings minimising
        sum_i alpha_i |w_i - e_i|^2 + sum_(i,j) beta_ij |e_i - w_j|^2
    (as-written), or the classical variant with e_j in the second term
    """
    cfg = cfg or retrofit_config()
    logger.info("retrofit - %d concepts, mode %s" % (len(graph), cfg.mode))

    ids = graph.concept_ids()
    n = len(ids)
    m = words.dimension
    overrides = cfg.alpha or {}

    has_word = np.array([cid in words for cid in ids], dtype=np.float64)
    alpha = np.array([overrides.get(cid, 1.0 if cid in words else 0.0)
                      for cid in ids], dtype=np.float64)
    for i, cid in enumerate(ids):
        if alpha[i] > 0 and not has_word[i]:
            raise MissingWordVector("concept %s has alpha %f but no word "
                                    "vector" % (cid, alpha[i]))

    W = np.zeros((n, m), dtype=np.float64)
    for i, cid in enumerate(ids):
        if has_word[i]:
            W[i] = words[cid]

    B = _adjacency(graph, ids)
    anchor = alpha[:, None] * W

    # as-written: neighbours contribute their word vectors
    den = alpha + B @ has_word
    present = den > 0
    E = np.zeros((n, m), dtype=np.float64)
    E[present] = (anchor + B @ W)[present] / den[present, None]
    _pass_through(E, W, alpha, B @ has_word)

    if cfg.mode == retrofit_mode.CLASSICAL:
        E, present = _retrofit_classical(B, alpha, W, E, cfg)

    omitted = [cid for i, cid in enumerate(ids) if not present[i]]
    if omitted:
        logger.warning("retrofit - %d concepts have no word vector and no "
                       "usable neighbours, omitted: %s" %
                       (len(omitted), omitted[:10]))

    vectors = dict((cid, E[i]) for i, cid in enumerate(ids) if present[i])
    return embedding_store(vectors, kind=embedding_kind.SCADS, dimension=m)


def _pass_through(E, W, alpha, neighbour_weight):
    # rows without neighbour weight keep their word vector exactly
    alone = (alpha > 0) & (neighbour_weight == 0)
    E[alone] = W[alone]


def _anchored(B, alpha):
    """
    Concepts whose component under positive-weight edges holds at least
    one concept with alpha > 0
    """
    if B.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    links = B.copy()
    links.data = (links.data > 0).astype(np.float64)
    links.eliminate_zeros()
    _, labels = csgraph.connected_components(links, directed=False)
    anchored_labels = np.unique(labels[alpha > 0])
    return np.isin(labels, anchored_labels)


def _retrofit_classical(B, alpha, W, E, cfg):
    present = _anchored(B, alpha)
    mask = present.astype(np.float64)
    anchor = alpha[:, None] * W
    den = alpha + B @ mask

    converged = False
    for iteration in range(cfg.max_iterations):
        update = np.zeros_like(E)
        update[present] = (anchor + B @ (E * mask[:, None]))[present] / \
            den[present, None]
        _pass_through(update, W, alpha, B @ mask)
        delta = np.max(np.abs(update - E)) if E.size else 0.0
        E = update
        if delta < cfg.tolerance:
            converged = True
            logger.debug("retrofit - converged after %d iterations" %
                         (iteration + 1))
            break

    if not converged:
        logger.warning("retrofit - no convergence after %d iterations" %
                       cfg.max_iterations)
    return E, present
