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
Command line interface: JSON on stdout, logs on stderr.
Exit codes: 0 success, 1 usage error, 2 data error.
"""
import sys
import json
import argparse

from pydantic import ValidationError

from taglets.lib.config import load_config, MODULES
from taglets.lib.errors import TagletsError, MalformedData
from taglets.lib.embeddings import (load_embeddings, retrofit,
                                    retrofit_config, top_n_related)
from taglets.lib.scadsgraph import (load_graph, load_scads, save_graph,
                                    dataset_manifest, prune_level)
from taglets.lib.selection import save_selection
from taglets.lib.softmax import taglet
from taglets.lib.exampleio import example_set
from taglets.lib.distill import evaluate_accuracy
from taglets.lib.synthetic import synthetic_spec, generate_synthetic_task
from taglets.lib.pipeline import pipeline_run, run_pipeline
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_cli')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _argument_parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(obj, out):
    out.write(json.dumps(obj, indent=2, ensure_ascii=False))
    out.write("\n")


def _add_overrides(p):
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--prune-level", dest="prune_level",
                   choices=prune_level.ALL, help="prune level")
    p.add_argument("--n", type=int, help="related concepts per class")
    p.add_argument("--k", type=int, help="examples per related concept")
    p.add_argument("--modules", help="comma separated subset of %s" %
                   ",".join(MODULES))


def _overrides(args):
    return {"seed": args.seed, "level": args.prune_level, "n": args.n,
            "k": args.k, "modules": args.modules}


def build_parser():
    parser = _argument_parser(
        prog="taglets",
        description="SCADS auxiliary data selection and taglet training")
    subparsers = parser.add_subparsers(dest="command", metavar="command")

    build_p = subparsers.add_parser(
        "build", help="retrofit a graph and write a SCADS database")
    build_p.add_argument("--graph", required=True, help="graph JSONL file")
    build_p.add_argument("--words", required=True, help="word vector TSV")
    build_p.add_argument("--manifest", action="append", default=[],
                         help="dataset manifest to install (repeatable)")
    build_p.add_argument("--mode", default="as-written",
                         choices=["as-written", "classical"],
                         help="retrofitting mode")
    build_p.add_argument("--out", required=True, help="database to write")

    install_p = subparsers.add_parser(
        "install", help="install a dataset manifest into a database")
    install_p.add_argument("--db", required=True, help="SCADS database")
    install_p.add_argument("--manifest", required=True,
                           help="dataset manifest JSON")

    remove_p = subparsers.add_parser(
        "remove", help="remove an installed dataset from a database")
    remove_p.add_argument("--db", required=True, help="SCADS database")
    remove_p.add_argument("--name", required=True, help="dataset name")

    related_p = subparsers.add_parser(
        "related", help="top-N concepts related to a class")
    related_p.add_argument("--db", required=True, help="SCADS database")
    related_p.add_argument("--class", dest="class_id", required=True,
                           help="target concept id or term")
    related_p.add_argument("--n", type=int, default=10,
                           help="number of related concepts")
    related_p.add_argument("--prune-level", dest="prune_level",
                           default=prune_level.NONE,
                           choices=prune_level.ALL, help="prune level")
    related_p.add_argument("--all", action="store_true",
                           help="rank every embedded concept, not only "
                                "those with examples")

    select_p = subparsers.add_parser(
        "select", help="select auxiliary data for a configured task")
    select_p.add_argument("--config", required=True, help="config JSON")
    select_p.add_argument("--out", required=True,
                          help="selection JSON (CSV is written next to it)")
    _add_overrides(select_p)

    run_p = subparsers.add_parser("run", help="run the full pipeline")
    run_p.add_argument("--config", required=True, help="config JSON")
    _add_overrides(run_p)

    eval_p = subparsers.add_parser(
        "eval", help="accuracy of a saved taglet or end model")
    eval_p.add_argument("--model", required=True, help="model JSON")
    eval_p.add_argument("--test", required=True, help="labeled test CSV")

    synth_p = subparsers.add_parser(
        "synth", help="generate a synthetic task")
    synth_p.add_argument("--out", required=True, help="output directory")
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("--classes", type=int, default=5)
    synth_p.add_argument("--dim", type=int, default=16)
    synth_p.add_argument("--shots", type=int, default=1)
    synth_p.add_argument("--unlabeled", type=int, default=500)
    synth_p.add_argument("--rho", type=float, default=1.0)
    synth_p.add_argument("--test-per-class", dest="test_per_class",
                         type=int, default=100)
    synth_p.add_argument("--per-concept", dest="per_concept", type=int,
                         default=100)

    return parser


"""
Commands
"""


def cmd_build(args, out):
    graph = load_graph(args.graph)
    for path in args.manifest:
        graph.install_dataset(dataset_manifest.fromFile(path))
    words = load_embeddings(args.words)
    scads = retrofit(graph, words, retrofit_config(mode=args.mode))
    save_graph(graph, args.out, embeddings=scads)
    _emit({"db": args.out, "concepts": len(graph),
           "edges": len(graph.edges()),
           "datasets": [m.name for m in graph.datasets()],
           "embeddings": len(scads)}, out)


def cmd_install(args, out):
    graph, scads = load_scads(args.db)
    manifest = dataset_manifest.fromFile(args.manifest)
    graph.install_dataset(manifest)
    save_graph(graph, args.db, embeddings=scads)
    attached = sum(1 for cid in graph.concept_ids()
                   for name, _ in graph._examples[cid]
                   if name == manifest.name)
    _emit({"db": args.db, "installed": manifest.name,
           "examples": attached,
           "datasets": [m.name for m in graph.datasets()]}, out)


def cmd_remove(args, out):
    graph, scads = load_scads(args.db)
    graph.remove_dataset(args.name)
    save_graph(graph, args.db, embeddings=scads)
    _emit({"db": args.db, "removed": args.name,
           "datasets": [m.name for m in graph.datasets()]}, out)


def cmd_related(args, out):
    graph, scads = load_scads(args.db)
    query = args.class_id
    if args.all:
        if args.prune_level != prune_level.NONE:
            raise UsageError("--all ranks every concept, it takes no "
                             "--prune-level")
        candidates = set(scads.terms())
    else:
        # a query outside the graph is approximated and prunes nothing
        targets = [query] if query in graph else []
        candidates = set(cid for cid in
                         graph.prune_candidates(targets, args.prune_level)
                         if cid in scads)
    related = top_n_related(query, candidates, args.n, scads)
    _emit([[cid, sim] for cid, sim in related], out)


def cmd_select(args, out):
    cfg = load_config(args.config, **_overrides(args))
    run = pipeline_run(cfg)
    run.load_graph()
    run.install()
    run.load_words()
    run.retrofit()
    run.select()
    save_selection(run.selection, args.out)
    _emit(run.selection_summary(), out)


def cmd_run(args, out):
    cfg = load_config(args.config, **_overrides(args))
    report = run_pipeline(cfg)
    out.write(report.toJson())
    out.write("\n")


def cmd_eval(args, out):
    model = taglet.load(args.model)
    test = example_set.fromCsv(args.test, model.classes)
    if test.labels is None:
        raise MalformedData("test examples carry no class column",
                            path=args.test)
    _emit({"model": model.name, "examples": len(test),
           "accuracy": evaluate_accuracy(model, test)}, out)


def cmd_synth(args, out):
    spec = synthetic_spec(seed=args.seed, classes=args.classes,
                          dim=args.dim, shots=args.shots,
                          unlabeled=args.unlabeled, rho=args.rho,
                          test_per_class=args.test_per_class,
                          per_concept=args.per_concept)
    task = generate_synthetic_task(spec, args.out)
    _emit({"out": args.out, "config": task.config_path,
           "spec": spec.toDict()}, out)


COMMANDS = {
    "build": cmd_build,
    "install": cmd_install,
    "remove": cmd_remove,
    "related": cmd_related,
    "select": cmd_select,
    "run": cmd_run,
    "eval": cmd_eval,
    "synth": cmd_synth,
}


def cli_dispatch(argv, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if not args.command:
            raise UsageError("a command is required")
    except UsageError as e:
        sys.stderr.write("taglets: error: %s\n" % e)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logger.info("cli_dispatch - %s" % args.command)
    try:
        COMMANDS[args.command](args, out)
    except UsageError as e:
        sys.stderr.write("taglets: error: %s\n" % e)
        return EXIT_USAGE
    except (TagletsError, OSError, ValidationError, ValueError) as e:
        logger.error("%s failed - %s" % (args.command, e))
        _emit({"error": e.__class__.__name__, "message": str(e)}, out)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
