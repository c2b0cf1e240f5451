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
End-to-end run: graph -> scads embeddings -> auxiliary selection ->
taglets -> pseudo labels -> end model -> evaluation
"""
import os
import json
import time

import numpy as np

from taglets.lib.config import derive_seed, pipeline_config
from taglets.lib.errors import (StageFailed, NoTaglets, NoTestData,
                                MalformedData)
from taglets.lib.exampleio import example_set
from taglets.lib.embeddings import load_embeddings, retrofit
from taglets.lib.scadsgraph import load_graph, dataset_manifest
from taglets.lib.selection import selection_request, select_related_data
from taglets.lib.softmax import softmax_linear_model, train_supervised
from taglets.lib.abstracttaglet import taglet_task
from taglets.lib.pluginloader import pluginloader
from taglets.lib.distill import (pseudo_label_set, train_end_model,
                                 evaluate_accuracy, evaluate_ensemble,
                                 save_pseudo_labels)
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_pipeline')

REPORT_SCHEMA = 1
REPORT_FILE = "report.json"
END_MODEL_FILE = "end_model.json"
PSEUDO_LABEL_FILE = "pseudo_labels.csv"


def stage(name):
    """
    Re-raise any failure of the wrapped step as StageFailed(name, cause)
    and record its wall-clock time
    """
    def decorator(func):
        def wrap(self, *args, **kwargs):
            started = time.perf_counter()
            try:
                return func(self, *args, **kwargs)
            except StageFailed:
                raise
            except Exception as e:
                logger.error("stage %s failed - %s" % (name, e))
                raise StageFailed(name, e) from e
            finally:
                elapsed = time.perf_counter() - started
                self.timings[name] = self.timings.get(name, 0.0) + elapsed
                logger.info("stage %s - %.3f sec" % (name, elapsed))

        wrap.__name__ = func.__name__
        wrap.__doc__ = func.__doc__
        return wrap
    return decorator


class pipeline_inputs(object):
    """
    Pre-loaded inputs; any field left None is read from the config paths
    """
    def __init__(self, graph=None, words=None, labeled=None, unlabeled=None,
                 test=None):
        self.graph = graph
        self.words = words
        self.labeled = labeled
        self.unlabeled = unlabeled
        self.test = test

    @classmethod
    def fromTask(cls, task):
        return cls(task.graph, task.words, task.labeled, task.unlabeled,
                   task.test)


class run_report(object):
    def __init__(self, msg):
        self.msg = msg

    def __repr__(self):
        return "<run_report seed(%s) end_model(%s)>" % \
            (self.msg.get("seed"), self.msg.get("end_model_accuracy"))

    def __getitem__(self, key):
        return self.msg[key]

    @property
    def taglet_accuracies(self):
        return self.msg["taglets"]

    @property
    def ensemble_accuracy(self):
        return self.msg["ensemble_accuracy"]

    @property
    def end_model_accuracy(self):
        return self.msg["end_model_accuracy"]

    @property
    def baseline_accuracy(self):
        return self.msg["baseline_accuracy"]

    @property
    def mean_taglet_accuracy(self):
        return self.msg["mean_taglet_accuracy"]

    def toDict(self):
        return self.msg

    def toJson(self):
        return json.dumps(self.msg, indent=2, ensure_ascii=False)

    @classmethod
    def fromJson(cls, json_str):
        try:
            msg = json.loads(json_str)
        except ValueError as e:
            raise MalformedData("report is not JSON - %s" % e)
        if msg.get("schema") != REPORT_SCHEMA:
            raise MalformedData("unsupported report schema %r" %
                                msg.get("schema"))
        return cls(msg)


class pipeline_run(object):
    def __init__(self, cfg, inputs=None):
        if not isinstance(cfg, pipeline_config):
            cfg = pipeline_config.fromDict(cfg)
        self.cfg = cfg
        self.inputs = inputs or pipeline_inputs()
        self.loader = pluginloader()
        self.timings = {}

        self.graph = None
        self.words = None
        self.scads = None
        self.labeled = None
        self.unlabeled = None
        self.test = None
        self.selection = None
        self.taglets = []
        self.skipped = []
        self.pseudo = None
        self.end_model = None
        self.baseline = None

    def seed_of(self, stage_name):
        return derive_seed(self.cfg.seed, stage_name)

    """
    Stages
    """
    @stage("load_graph")
    def load_graph(self):
        if self.inputs.graph is not None:
            self.graph = self.inputs.graph
        else:
            self.graph = load_graph(self.cfg.graph)

    @stage("install")
    def install(self):
        installed = set(m.name for m in self.graph.datasets())
        for path in self.cfg.manifests:
            manifest = dataset_manifest.fromFile(path)
            if manifest.name in installed:
                logger.warning("install - %s is already installed, "
                               "skipped" % manifest.name)
                continue
            self.graph.install_dataset(manifest)
            installed.add(manifest.name)
        self.graph.freeze()

    @stage("load_words")
    def load_words(self):
        self.words = self.inputs.words
        if self.words is None:
            self.words = load_embeddings(self.cfg.words)

    @stage("load_data")
    def load_data(self):
        cfg = self.cfg
        names = cfg.class_names()
        self.labeled = self.inputs.labeled
        if self.labeled is None and cfg.labeled:
            self.labeled = example_set.fromCsv(cfg.labeled, names)
        if self.labeled is not None and self.labeled.labels is None:
            raise MalformedData("labeled examples carry no class column",
                                path=cfg.labeled)

        self.unlabeled = self.inputs.unlabeled
        if self.unlabeled is None:
            self.unlabeled = example_set.fromCsv(cfg.unlabeled)

        self.test = self.inputs.test
        if self.test is None:
            self.test = example_set.fromCsv(cfg.test, names)
        if self.test.labels is None:
            raise NoTestData("test examples carry no class column")

    @stage("retrofit")
    def retrofit(self):
        self.scads = retrofit(self.graph, self.words, self.cfg.retrofit)

    @stage("select")
    def select(self):
        cfg = self.cfg
        request = selection_request(cfg.targets(), cfg.n_related,
                                    cfg.per_concept, cfg.prune_level,
                                    self.seed_of("select"))
        self.selection = select_related_data(self.graph, self.scads,
                                             request)

    def module_config(self, name):
        cfg = self.cfg
        train = cfg.train
        if name == "transfer":
            return {
                "target_train": train.target.with_seed(
                    self.seed_of("transfer/target")),
                "aux_train": train.aux.with_seed(
                    self.seed_of("transfer/aux")),
                "head_init": cfg.head_init,
            }
        if name == "multitask":
            return {
                "target_train": train.target.with_seed(
                    self.seed_of("multitask/target")),
                "lambda": cfg.lam,
                "hidden_dim": cfg.hidden_dim,
            }
        if name == "fixmatch":
            return {
                "target_train": train.target.with_seed(
                    self.seed_of("fixmatch/target")),
                "aux_train": train.aux.with_seed(
                    self.seed_of("fixmatch/aux")),
                "unlabeled_train": train.unlabeled.with_seed(
                    self.seed_of("fixmatch/unlabeled")),
                "tau": cfg.tau,
                "perturb": {"weak": cfg.perturb.weak,
                            "strong": cfg.perturb.strong,
                            "seed": self.seed_of("fixmatch/perturb")},
            }
        if name == "zeroshot":
            return {"ridge": cfg.ridge, "logit_scale": cfg.logit_scale}
        return {}

    @stage("train_taglets")
    def train_taglets(self):
        has_labeled = self.labeled is not None and len(self.labeled) > 0
        task = taglet_task(self.cfg.targets(), self.selection,
                           self.labeled if has_labeled else None,
                           self.unlabeled, self.scads)
        for name in self.cfg.modules:
            module = self.loader.load(name, self.module_config(name))
            if module.requires_labeled() and not has_labeled:
                logger.warning("train_taglets - %s needs labeled examples, "
                               "skipped" % name)
                self.skipped.append(name)
                continue
            started = time.perf_counter()
            self.taglets.append(module.train(task))
            self.timings["taglet/%s" % name] = \
                time.perf_counter() - started
        if not self.taglets:
            raise NoTaglets("no enabled module could be trained")

    @stage("pseudo_label")
    def pseudo_label(self):
        self.pseudo = pseudo_label_set(self.taglets, self.unlabeled)

    @stage("end_model")
    def distill(self):
        cfg = self.cfg.train.end.with_seed(self.seed_of("end"))
        self.end_model = train_end_model(self.pseudo, self.labeled, cfg,
                                         self.cfg.class_names())

    @stage("baseline")
    def train_baseline(self):
        """
        Labeled-only supervised model, from zero weights
        """
        if self.labeled is None or len(self.labeled) == 0:
            self.baseline = None
            return
        cfg = self.cfg.train.target.with_seed(self.seed_of("baseline"))
        model = softmax_linear_model.zeros(len(self.cfg.classes),
                                           self.labeled.dimension)
        self.baseline, _ = train_supervised(model, self.labeled, cfg)

    @stage("evaluate")
    def evaluate(self):
        taglet_accuracies = dict((t.name, evaluate_accuracy(t, self.test))
                                 for t in self.taglets)
        ensemble = evaluate_ensemble(self.taglets, self.test)
        end = evaluate_accuracy(self.end_model, self.test)
        baseline = None
        if self.baseline is not None:
            baseline = evaluate_accuracy(self.baseline, self.test)
        mean_taglet = float(np.mean(list(taglet_accuracies.values())))

        msg = {
            "schema": REPORT_SCHEMA,
            "seed": self.cfg.seed,
            "taglets": taglet_accuracies,
            "skipped_modules": list(self.skipped),
            "mean_taglet_accuracy": mean_taglet,
            "ensemble_accuracy": ensemble,
            "end_model_accuracy": end,
            "baseline_accuracy": baseline,
            "ensemble_improvement": ensemble - mean_taglet,
            "end_model_improvement": end - mean_taglet,
            "selection": self.selection_summary(),
            "config": self.cfg.toDict(),
        }
        return msg

    @stage("write_outputs")
    def write_outputs(self, report):
        out_dir = self.cfg.output_dir
        if not out_dir:
            return
        os.makedirs(out_dir, exist_ok=True)
        self.end_model.save(os.path.join(out_dir, END_MODEL_FILE))
        save_pseudo_labels(self.pseudo,
                           os.path.join(out_dir, PSEUDO_LABEL_FILE))
        with open(os.path.join(out_dir, REPORT_FILE), "w",
                  encoding="utf-8") as f:
            f.write(report.toJson())
            f.write("\n")

    def selection_summary(self):
        sel = self.selection
        return {
            "prune_level": sel.level,
            "n_related": sel.n_related,
            "per_concept": sel.per_concept,
            "examples": len(sel),
            "related": dict((name, [{"concept": cid, "sim": sim}
                                    for cid, sim in sel.related[name]])
                            for name in sel.class_names()),
        }

    def run(self):
        logger.info("run - seed %d, modules %s, prune level %s" %
                    (self.cfg.seed, self.cfg.modules, self.cfg.prune_level))
        self.load_graph()
        self.install()
        self.load_words()
        self.load_data()
        self.retrofit()
        self.select()
        self.train_taglets()
        self.pseudo_label()
        self.distill()
        self.train_baseline()
        msg = self.evaluate()
        if self.cfg.report_timings:
            msg["timings"] = dict(self.timings)
        report = run_report(msg)
        self.write_outputs(report)
        logger.info("run - ensemble %.4f, end model %.4f" %
                    (report.ensemble_accuracy, report.end_model_accuracy))
        return report


def run_pipeline(cfg, inputs=None):
    return pipeline_run(cfg, inputs).run()


def run_seeds(cfg, seeds, inputs_of=None):
    """
    Run the pipeline once per seed; inputs_of(seed) may return a
    (config, pipeline_inputs) pair, otherwise cfg is rerun with the seed
    replaced. Returns the reports and the per-metric means
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("run_seeds needs at least one seed")

    reports = []
    for seed in seeds:
        if inputs_of is not None:
            seed_cfg, inputs = inputs_of(seed)
        else:
            seed_cfg, inputs = cfg.model_copy(update={"seed": seed}), None
        reports.append(run_pipeline(seed_cfg, inputs))

    def mean_of(key):
        values = [r[key] for r in reports if r[key] is not None]
        return float(np.mean(values)) if values else None

    means = dict((key, mean_of(key)) for key in
                 ["ensemble_accuracy", "end_model_accuracy",
                  "baseline_accuracy", "mean_taglet_accuracy"])
    names = []
    for r in reports:
        names.extend(n for n in r.taglet_accuracies if n not in names)
    means["taglets"] = dict(
        (name, float(np.mean([r.taglet_accuracies[name] for r in reports
                              if name in r.taglet_accuracies])))
        for name in names)
    return reports, means
