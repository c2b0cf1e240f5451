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
Exceptions
"""


class TagletsError(Exception):
    def __init__(self, value):
        self.value = value

    def __str__(self):
        return repr(self.value)


class InvalidConcept(TagletsError):
    pass


class UnknownConcept(TagletsError):
    pass


class UnknownDataset(TagletsError):
    pass


class InvalidWeight(TagletsError):
    pass


class MalformedData(TagletsError):
    def __init__(self, value, line=None, path=None):
        super(MalformedData, self).__init__(value)
        self.line = line
        self.path = path

    def __str__(self):
        where = ""
        if self.path:
            where = "%s" % self.path
        if self.line is not None:
            where = "%s:%d" % (where, self.line)
        if where:
            return "%s: %r" % (where, self.value)
        return repr(self.value)


class InvalidHierarchy(TagletsError):
    pass


class GraphFrozen(TagletsError):
    pass


class MissingWordVector(TagletsError):
    pass


class NoApproximation(TagletsError):
    pass


class DegenerateVector(TagletsError):
    pass


class MissingEmbedding(TagletsError):
    pass


class EmptyCandidates(TagletsError):
    pass


class ShapeError(TagletsError):
    pass


class InfiniteLoss(TagletsError):
    pass


class NoLabeledData(TagletsError):
    pass


class InvalidThreshold(TagletsError):
    pass


class NoTaglets(TagletsError):
    pass


class NoUnlabeledData(TagletsError):
    pass


class NoTrainingData(TagletsError):
    pass


class NoTestData(TagletsError):
    pass


class InvalidSpec(TagletsError):
    pass


class InvalidConfig(TagletsError):
    pass


class PluginNotExist(TagletsError):
    pass


class PluginLoaderError(TagletsError):
    pass


class StageFailed(TagletsError):
    """
    A pipeline stage failed; the original exception is kept in cause
    """
    def __init__(self, stage, cause):
        super(StageFailed, self).__init__("%s: %s" % (stage, cause))
        self.stage = stage
        self.cause = cause

    def __str__(self):
        return "stage %s failed - %s: %s" % \
            (self.stage, self.cause.__class__.__name__, self.cause)
