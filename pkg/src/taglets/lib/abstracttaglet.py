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

from abc import ABCMeta, abstractmethod

"""
Abstraction of a taglet training module
"""


class taglet_task(object):
    """
    Everything a module may train on
    """
    def __init__(self,
                 targets=None,
                 selection=None,
                 labeled=None,
                 unlabeled=None,
                 scads=None):
        # ordered (class name, concept id) pairs
        self.targets = list(targets or [])
        self.selection = selection
        self.labeled = labeled
        self.unlabeled = unlabeled
        self.scads = scads

    def __repr__(self):
        return "<taglet_task C(%d) aux(%d) labeled(%d) unlabeled(%d)>" % \
            (len(self.targets),
             len(self.selection) if self.selection is not None else 0,
             len(self.labeled) if self.labeled is not None else 0,
             len(self.unlabeled) if self.unlabeled is not None else 0)

    def class_names(self):
        return [name for name, _ in self.targets]

    @property
    def num_classes(self):
        return len(self.targets)


class taglet_module_base(metaclass=ABCMeta):
    # module name as used in the enabled-module list
    @abstractmethod
    def name(self):
        pass

    # train and return a taglet over the task's target classes
    @abstractmethod
    def train(self, task):
        pass

    # True if the module cannot run without labeled examples
    @abstractmethod
    def requires_labeled(self):
        pass

    # True if the module consumes the unlabeled pool
    @abstractmethod
    def uses_unlabeled(self):
        pass

    def __repr__(self):
        return "<%s %s>" % (self.__class__.__module__, self.name())


def phase_config(config, key, default=None):
    """
    train_config of one training phase; plugin configs may carry either
    train_config instances or plain dicts
    """
    from taglets.lib.softmax import train_config

    value = config.get(key)
    if value is None:
        return default if default is not None else train_config()
    if isinstance(value, train_config):
        return value
    if isinstance(value, dict):
        return train_config(**value)
    raise ValueError("%s configuration is not given correctly" % key)


def check_dimensions(selection, data):
    from taglets.lib.errors import ShapeError

    if selection is not None and len(selection) > 0 and data is not None \
            and selection.dimension != data.dimension:
        raise ShapeError("auxiliary data has dimension %d, target data %d" %
                         (selection.dimension, data.dimension))
