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

import os
import sys
import logging

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL_ENV = 'TAGLETS_LOG_LEVEL'
LOG_FILE_ENV = 'TAGLETS_LOG_FILE'

_configured = set()


def get_logger(name):
    """
    Return the named logger with stderr (and optional file) handlers
    attached exactly once
    """
    logger = logging.getLogger(name)
    if name in _configured:
        return logger

    level = os.environ.get(LOG_LEVEL_ENV, 'INFO').upper()
    logger.setLevel(getattr(logging, level, logging.INFO))
    # do not duplicate records through the root logger
    logger.propagate = False

    formatter = logging.Formatter(LOG_FORMAT)
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(formatter)
    logger.addHandler(sh)

    log_file = os.environ.get(LOG_FILE_ENV)
    if log_file:
        fh = logging.FileHandler(log_file)
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(formatter)
        logger.addHandler(fh)

    _configured.add(name)
    return logger
