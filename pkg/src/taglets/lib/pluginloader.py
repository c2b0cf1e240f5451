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

import importlib

from taglets.lib.errors import PluginNotExist, PluginLoaderError
from taglets.lib.logutil import get_logger

logger = get_logger('taglets_pluginloader')

PLUGIN_PACKAGE = "taglets.plugins"


class pluginloader(object):
    """
    Find a training module plugin and create an instance
    """
    def __init__(self, package=PLUGIN_PACKAGE):
        self.package = package

    def findModule(self, plugin_name=None):
        module_name = "%s.%s.%s_plugin" % \
            (self.package, plugin_name, plugin_name)
        try:
            return importlib.import_module(module_name)
        except ModuleNotFoundError as e:
            # a missing dependency inside an existing plugin must surface
            if e.name and not module_name.startswith(e.name):
                raise
            return None

    def load(self, plugin_name=None, plugin_config=None):
        if plugin_name:
            logger.debug("load - %s" % plugin_name)
            plugin = self.findModule(plugin_name)
            if plugin:
                return plugin.plugin_impl(plugin_config or {})
            else:
                raise PluginNotExist(
                    "unable to find a plugin for %s" %
                    plugin_name)
        else:
            raise PluginLoaderError("a plugin name is not given")
