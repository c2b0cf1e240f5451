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
Pipeline configuration: a single JSON file, unknown keys rejected
"""
import os
import json
import hashlib
from typing import List, Optional

from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      field_validator)

from taglets.lib.errors import InvalidConfig
from taglets.lib.embeddings import retrofit_config
from taglets.lib.scadsgraph import prune_level
from taglets.lib.softmax import train_config

MODULES = ["transfer", "multitask", "fixmatch", "zeroshot"]


def derive_seed(seed, stage):
    """
    Per-stage seed: first 8 bytes of sha256("<seed>/<stage>")
    """
    digest = hashlib.sha256(("%s/%s" % (seed, stage)).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big")


class target_class(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    # defaults to the class name
    concept: Optional[str] = None

    def concept_id(self):
        return self.concept or self.name


class phase_configs(BaseModel):
    model_config = ConfigDict(extra="forbid")

    aux: train_config = Field(default_factory=lambda: train_config(epochs=20))
    target: train_config = Field(
        default_factory=lambda: train_config(epochs=200))
    unlabeled: train_config = Field(
        default_factory=lambda: train_config(epochs=20))
    end: train_config = Field(default_factory=lambda: train_config(epochs=50))


class perturb_config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weak: float = Field(default=0.01, ge=0)
    strong: float = Field(default=0.1, ge=0)


class pipeline_config(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = 0

    graph: str
    words: str
    manifests: List[str] = Field(default_factory=list)
    labeled: Optional[str] = None
    unlabeled: str
    test: str
    output_dir: Optional[str] = None

    classes: List[target_class]
    n_related: int = Field(default=10, ge=1)
    per_concept: int = Field(default=100, ge=1)
    prune_level: str = prune_level.NONE
    lam: float = Field(default=1.0, ge=0, alias="lambda")
    tau: float = Field(default=0.95, gt=0)
    hidden_dim: Optional[int] = Field(default=None, ge=1)
    head_init: bool = True
    perturb: perturb_config = Field(default_factory=perturb_config)
    ridge: float = Field(default=1e-6, gt=0)
    logit_scale: float = Field(default=1.0, gt=0)
    retrofit: retrofit_config = Field(default_factory=retrofit_config)
    train: phase_configs = Field(default_factory=phase_configs)
    modules: List[str] = Field(default_factory=lambda: list(MODULES))
    report_timings: bool = False

    @field_validator("prune_level", mode="before")
    @classmethod
    def _prune_level(cls, value):
        return prune_level.parse(value)

    @field_validator("modules")
    @classmethod
    def _modules(cls, value):
        if not value:
            raise ValueError("at least one module must be enabled")
        unknown = [m for m in value if m not in MODULES]
        if unknown:
            raise ValueError("unknown modules %s" % unknown)
        if len(set(value)) != len(value):
            raise ValueError("modules listed twice")
        # keep the canonical order so the vote matrix row order is fixed
        return [m for m in MODULES if m in value]

    @field_validator("classes")
    @classmethod
    def _classes(cls, value):
        if len(value) < 1:
            raise ValueError("at least one target class is needed")
        names = [c.name for c in value]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        return value

    def targets(self):
        return [(c.name, c.concept_id()) for c in self.classes]

    def class_names(self):
        return [c.name for c in self.classes]

    def toDict(self):
        return self.model_dump(mode="json", by_alias=True)

    def toJson(self):
        return json.dumps(self.toDict(), indent=2)

    @classmethod
    def fromDict(cls, dictionary):
        try:
            return cls.model_validate(dictionary)
        except ValidationError as e:
            raise InvalidConfig(str(e))


PATH_KEYS = ["graph", "words", "labeled", "unlabeled", "test", "output_dir"]


def resolve_paths(dictionary, base_dir):
    """
    Make relative paths of a config dict relative to base_dir
    """
    resolved = dict(dictionary)
    for key in PATH_KEYS:
        value = resolved.get(key)
        if isinstance(value, str) and not os.path.isabs(value):
            resolved[key] = os.path.join(base_dir, value)
    if isinstance(resolved.get("manifests"), list):
        resolved["manifests"] = [
            m if not isinstance(m, str) or os.path.isabs(m)
            else os.path.join(base_dir, m)
            for m in resolved["manifests"]]
    return resolved


def apply_overrides(dictionary, seed=None, level=None, n=None, k=None,
                    modules=None):
    updated = dict(dictionary)
    if seed is not None:
        updated["seed"] = int(seed)
    if level is not None:
        updated["prune_level"] = level
    if n is not None:
        updated["n_related"] = int(n)
    if k is not None:
        updated["per_concept"] = int(k)
    if modules is not None:
        if isinstance(modules, str):
            modules = [m.strip() for m in modules.split(",") if m.strip()]
        updated["modules"] = list(modules)
    return updated


def load_config(path, **overrides):
    with open(path, "r", encoding="utf-8") as f:
        try:
            msg = json.load(f)
        except ValueError as e:
            raise InvalidConfig("config is not JSON - %s" % e)
    if not isinstance(msg, dict):
        raise InvalidConfig("config must be a JSON object")
    msg = resolve_paths(msg, os.path.dirname(os.path.abspath(path)))
    return pipeline_config.fromDict(apply_overrides(msg, **overrides))
