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
Training module plugin test
"""

import numpy as np
import pytest

from conftest import gaussian_task
from taglets.lib.abstracttaglet import taglet_module_base, taglet_task
from taglets.lib.errors import (PluginNotExist, PluginLoaderError,
                                NoLabeledData, ShapeError, InvalidWeight,
                                InvalidThreshold, NoUnlabeledData,
                                NoApproximation, NoTrainingData)
from taglets.lib.embeddings import embedding_store
from taglets.lib.exampleio import example_set
from taglets.lib.pluginloader import pluginloader
from taglets.lib.selection import selection_request, aux_selection
from taglets.lib.softmax import (softmax_linear_model, train_config,
                                 train_supervised, one_hot, softmax)
from taglets.lib.distill import evaluate_accuracy
from taglets.plugins.transfer.transfer_plugin import (train_transfer_taglet,
                                                      head_from_auxiliary,
                                                      pretrain_on_auxiliary)
from taglets.plugins.multitask.multitask_plugin import train_multitask_taglet
import taglets.plugins.fixmatch.fixmatch_plugin as fixmatch_plugin
from taglets.plugins.fixmatch.fixmatch_plugin import (train_fixmatch_taglet,
                                                      unlabeled_losses,
                                                      unlabeled_gradient,
                                                      perturb_spec)
from taglets.plugins.zeroshot.zeroshot_plugin import build_zeroshot_taglet

TARGET = train_config(epochs=200, seed=3)
AUX = train_config(epochs=20, seed=4)
UNLABELED = train_config(epochs=20, seed=5)
SEEDS = range(20)


def _empty_selection(targets, dim, n_related=2):
    request = selection_request(targets, n_related, 5)
    return aux_selection(request, dict((name, []) for name, _ in targets),
                         example_set(np.zeros((0, dim))), dimension=dim)


def _mean(values):
    return float(np.mean(list(values)))


def test_loader_finds_every_module():
    loader = pluginloader()
    for name, needs_labeled in [("transfer", True), ("multitask", True),
                                ("fixmatch", True), ("zeroshot", False)]:
        module = loader.load(name, {})
        assert isinstance(module, taglet_module_base)
        assert module.name() == name
        assert module.requires_labeled() == needs_labeled
    assert loader.load("fixmatch", {}).uses_unlabeled()


def test_loader_errors():
    with pytest.raises(PluginNotExist):
        pluginloader().load("frobnicate", {})
    with pytest.raises(PluginLoaderError):
        pluginloader().load(None, {})


def test_plugin_config_is_checked():
    with pytest.raises(InvalidWeight):
        pluginloader().load("multitask", {"lambda": -1})
    with pytest.raises(InvalidThreshold):
        pluginloader().load("fixmatch", {"tau": 0})
    with pytest.raises(ValueError):
        pluginloader().load("transfer", {"target_train": "fast"})


"""
transfer
"""


def test_transfer_without_auxiliary_data_is_supervised():
    task = gaussian_task(0)
    empty = _empty_selection(task.targets, 16)
    t = train_transfer_taglet(empty, task.labeled, TARGET, AUX)
    model, _ = train_supervised(softmax_linear_model.zeros(5, 16),
                                task.labeled, TARGET)
    assert t.model == model
    assert t.classes == [name for name, _ in task.targets]


def test_head_is_mean_of_auxiliary_rows():
    task = gaussian_task(1, classes=2, n_related=2, per_concept=3)
    rng = np.random.default_rng(0)
    aux = softmax_linear_model(rng.standard_normal((4, 16)),
                               rng.standard_normal(4))
    head = head_from_auxiliary(task.selection, aux)
    assert np.allclose(head.W[0], aux.W[:2].mean(axis=0))
    assert np.allclose(head.W[1], aux.W[2:].mean(axis=0))
    assert head.b[1] == pytest.approx(aux.b[2:].mean())


def test_transfer_errors():
    task = gaussian_task(2)
    with pytest.raises(ShapeError):
        train_transfer_taglet(task.selection,
                              example_set(np.zeros((5, 3)), range(5)),
                              TARGET)
    with pytest.raises(NoLabeledData):
        train_transfer_taglet(task.selection,
                              example_set(np.zeros((0, 16)), []), TARGET)


def test_transfer_beats_labeled_only_baseline():
    transfer = []
    baseline = []
    for seed in SEEDS:
        task = gaussian_task(seed)
        t = train_transfer_taglet(task.selection, task.labeled, TARGET, AUX)
        model, _ = train_supervised(softmax_linear_model.zeros(5, 16),
                                    task.labeled, TARGET)
        transfer.append(evaluate_accuracy(t, task.test))
        baseline.append(evaluate_accuracy(model, task.test))
    assert _mean(transfer) > _mean(baseline)


"""
multitask
"""


def test_multitask_lambda_zero_ignores_auxiliary_head():
    task = gaussian_task(3)
    coupled_off = train_multitask_taglet(task.selection, task.labeled, 0.0,
                                         TARGET)
    no_aux = train_multitask_taglet(_empty_selection(task.targets, 16),
                                    task.labeled, 2.0, TARGET)
    assert coupled_off.model == no_aux.model


def test_multitask_errors_and_shapes():
    task = gaussian_task(4)
    with pytest.raises(InvalidWeight):
        train_multitask_taglet(task.selection, task.labeled, -0.5, TARGET)
    with pytest.raises(NoLabeledData):
        train_multitask_taglet(task.selection,
                               example_set(np.zeros((0, 16)), []), 1.0,
                               TARGET)
    t = train_multitask_taglet(task.selection, task.labeled, 1.0,
                               train_config(epochs=5), hidden_dim=4)
    assert t.model.W.shape == (5, 16)
    P = t.predict(task.test.features)
    assert np.allclose(P.sum(axis=1), 1.0)


def test_multitask_is_deterministic():
    task = gaussian_task(5)
    a = train_multitask_taglet(task.selection, task.labeled, 1.0, TARGET)
    b = train_multitask_taglet(task.selection, task.labeled, 1.0, TARGET)
    assert a.model == b.model


def test_multitask_auxiliary_task_helps_on_coinciding_clusters():
    coupled = []
    alone = []
    for seed in SEEDS:
        task = gaussian_task(seed)
        coupled.append(evaluate_accuracy(train_multitask_taglet(
            task.selection, task.labeled, 1.0, TARGET), task.test))
        alone.append(evaluate_accuracy(train_multitask_taglet(
            task.selection, task.labeled, 0.0, TARGET), task.test))
    assert _mean(coupled) >= _mean(alone) - 0.02


"""
fixmatch
"""


def test_fixmatch_threshold_above_one_keeps_pretrained_model():
    task = gaussian_task(6)
    fixmatch = train_fixmatch_taglet(task.selection, task.labeled,
                                     task.unlabeled, 1.5, perturb_spec(),
                                     TARGET, AUX, UNLABELED)
    transfer = train_transfer_taglet(task.selection, task.labeled, TARGET,
                                     AUX)
    assert fixmatch.model == transfer.model
    assert fixmatch.name == "fixmatch"


def test_fixmatch_low_confidence_is_masked():
    model = softmax_linear_model([[np.log(1.5)], [0.0]])
    losses, mask, pseudo = unlabeled_losses(model, np.array([[1.0]]),
                                            np.array([[1.0]]), 0.95)
    assert mask.tolist() == [False]
    assert losses.tolist() == [0.0]
    assert pseudo.tolist() == [0]

    losses, mask, _ = unlabeled_losses(model, np.array([[1.0]]),
                                       np.array([[1.0]]), 0.5)
    assert mask.tolist() == [True]
    assert losses[0] == pytest.approx(-np.log(0.6))


def test_fixmatch_masked_losses_are_exactly_zero():
    rng = np.random.default_rng(7)
    for _ in range(200):
        model = softmax_linear_model(3 * rng.standard_normal((4, 5)),
                                     rng.standard_normal(4))
        Ua = rng.standard_normal((30, 5))
        Ub = Ua + 0.1 * rng.standard_normal((30, 5))
        losses, mask, _ = unlabeled_losses(model, Ua, Ub,
                                           float(rng.uniform(0.3, 1.0)))
        assert np.sum(losses[~mask]) == 0.0
        assert np.all(losses[mask] >= 0)


def _confident_only_gradient(model, Ua, Ub, tau, normalizer):
    Pa = softmax(model.logits(Ua))
    rows = np.nonzero(np.max(Pa, axis=1) >= tau)[0]
    if len(rows) == 0:
        return np.zeros_like(model.W), np.zeros_like(model.b)
    pseudo = one_hot(np.argmax(Pa[rows], axis=1), model.num_classes)
    _, gW, gb = model.loss_and_grad(Ub[rows], pseudo,
                                    normalizer=float(normalizer))
    return gW, gb


def test_fixmatch_masked_rows_contribute_no_gradient():
    rng = np.random.default_rng(8)
    for _ in range(100):
        model = softmax_linear_model(3 * rng.standard_normal((4, 5)),
                                     rng.standard_normal(4))
        Ua = rng.standard_normal((30, 5))
        Ub = Ua + 0.1 * rng.standard_normal((30, 5))
        tau = float(rng.uniform(0.3, 1.0))
        gW, gb, mask = unlabeled_gradient(model, Ua, Ub, tau, 30)
        expected_gW, expected_gb = _confident_only_gradient(model, Ua, Ub,
                                                            tau, 30)
        assert np.allclose(gW, expected_gW, rtol=0, atol=1e-12)
        assert np.allclose(gb, expected_gb, rtol=0, atol=1e-12)

        # the strong view of a masked row does not matter
        moved = Ub.copy()
        moved[~mask] += 100.0
        gW2, gb2, _ = unlabeled_gradient(model, Ua, moved, tau, 30)
        assert np.array_equal(gW2, gW)
        assert np.array_equal(gb2, gb)


def test_fixmatch_trainer_steps_on_confident_rows_only(monkeypatch):
    task = gaussian_task(12)
    pretrained = pretrain_on_auxiliary(task.selection, task.labeled, TARGET,
                                       AUX)
    confidence = np.max(softmax(pretrained.logits(task.unlabeled.features)),
                        axis=1)
    tau = float(np.median(confidence))

    masks = []

    def checked_gradient(model, Ua, Ub, tau, normalizer):
        gW, gb, mask = unlabeled_gradient(model, Ua, Ub, tau, normalizer)
        expected_gW, expected_gb = _confident_only_gradient(
            model, Ua, Ub, tau, normalizer)
        assert np.allclose(gW, expected_gW, rtol=0, atol=1e-12)
        assert np.allclose(gb, expected_gb, rtol=0, atol=1e-12)
        masks.append(mask)
        return gW, gb, mask

    monkeypatch.setattr(fixmatch_plugin, "unlabeled_gradient",
                        checked_gradient)
    train_fixmatch_taglet(task.selection, task.labeled, task.unlabeled, tau,
                          perturb_spec(seed=1), TARGET, AUX, UNLABELED)
    assert masks
    assert any(mask.any() and not mask.all() for mask in masks)


def test_fixmatch_errors():
    task = gaussian_task(8)
    with pytest.raises(InvalidThreshold):
        train_fixmatch_taglet(task.selection, task.labeled, task.unlabeled,
                              0.0, perturb_spec(), TARGET)
    with pytest.raises(NoUnlabeledData):
        train_fixmatch_taglet(task.selection, task.labeled,
                              example_set(np.zeros((0, 16))), 0.95,
                              perturb_spec(), TARGET)
    with pytest.raises(ValueError):
        perturb_spec(weak=-1.0)


def test_fixmatch_is_deterministic():
    task = gaussian_task(9)
    runs = [train_fixmatch_taglet(task.selection, task.labeled,
                                  task.unlabeled, 0.95,
                                  perturb_spec(seed=11), TARGET, AUX,
                                  UNLABELED) for _ in range(2)]
    assert runs[0].model == runs[1].model


def test_fixmatch_pseudo_labels_do_not_hurt():
    thresholded = []
    masked = []
    for seed in SEEDS:
        task = gaussian_task(seed)
        perturb = perturb_spec(seed=seed)
        thresholded.append(evaluate_accuracy(train_fixmatch_taglet(
            task.selection, task.labeled, task.unlabeled, 0.95, perturb,
            TARGET, AUX, UNLABELED), task.test))
        masked.append(evaluate_accuracy(train_fixmatch_taglet(
            task.selection, task.labeled, task.unlabeled, 1.5, perturb,
            TARGET, AUX, UNLABELED), task.test))
    assert _mean(thresholded) >= _mean(masked) - 0.02


"""
zeroshot
"""


def _aligned(dim):
    names = ["c%d" % i for i in range(dim)]
    Z = np.eye(dim)
    scads = embedding_store(dict(zip(names, Z)), kind="scads")
    targets = [("class%d" % i, name) for i, name in enumerate(names)]
    request = selection_request(targets, 1, 2)
    related = dict((t, [(cid, 1.0)]) for t, cid in targets)
    data = example_set(np.repeat(Z, 2, axis=0), np.repeat(np.arange(dim), 2))
    return targets, scads, aux_selection(request, related, data)


def test_zeroshot_aligned_spaces():
    targets, scads, sel = _aligned(3)
    t = build_zeroshot_taglet(targets, scads, sel)
    for c in range(3):
        assert int(np.argmax(t.predict(np.eye(3)[c]))) == c


def test_zeroshot_dominant_class_wins():
    targets, scads, sel = _aligned(2)
    t = build_zeroshot_taglet(targets, scads, sel)
    assert int(np.argmax(t.predict(np.array([1.0, 0.1])))) == 0


def test_zeroshot_logit_scale_sharpens():
    targets, scads, sel = _aligned(3)
    soft = build_zeroshot_taglet(targets, scads, sel).predict(np.eye(3)[0])
    sharp = build_zeroshot_taglet(targets, scads, sel,
                                  logit_scale=10.0).predict(np.eye(3)[0])
    assert sharp[0] > soft[0]


def test_zeroshot_errors():
    targets, scads, sel = _aligned(2)
    with pytest.raises(NoApproximation):
        build_zeroshot_taglet([("q", "zzz")] + targets[1:], scads, sel)
    with pytest.raises(NoTrainingData):
        build_zeroshot_taglet(targets, scads,
                              _empty_selection(targets, 2, n_related=1))


def test_zeroshot_plugin_needs_no_labeled_data():
    targets, scads, sel = _aligned(3)
    module = pluginloader().load("zeroshot", {"ridge": 1e-6})
    t = module.train(taglet_task(targets, sel, None, None, scads))
    assert t.name == "zeroshot"
    assert t.classes == ["class0", "class1", "class2"]
