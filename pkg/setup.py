#!/usr/bin/env python3

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

from setuptools import setup

import os

packages = [
    'taglets',
    'taglets.lib',
    'taglets.plugins'
]

# detect plugins
plugins = os.listdir('src/taglets/plugins')
for plugin in sorted(plugins):
    if os.path.isdir(os.path.join('src/taglets/plugins', plugin)) and \
            not plugin.startswith('__'):
        packages.append('taglets.plugins.' + plugin)

# dependencies
dependencies = [
    'numpy',
    'scipy',
    'networkx',
    'pydantic>=2',
    'expiringdict'
]

setup(
    name='taglets',
    version='0.1',
    description='SCADS auxiliary data selection and taglet training pipeline',
    license='Apache 2.0',
    packages=packages,
    package_dir={
        'taglets': 'src/taglets'
    },
    install_requires=dependencies,
    extras_require={
        'test': ['pytest']
    },
    entry_points={
        'console_scripts': ['taglets=taglets.cli:main']
    },
    python_requires='>=3.9',
    zip_safe=False
)
