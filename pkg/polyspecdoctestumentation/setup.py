##############################################################################
#
# Copyright polyspec Contributors.
# All Rights Reserved.
#
# This software is subject to the provisions of the Zope Public License,
# Version 2.1 (ZPL).  A copy of the ZPL should accompany this distribution.
# THIS SOFTWARE IS PROVIDED "AS IS" AND ANY AND ALL EXPRESS OR IMPLIED
# WARRANTIES ARE DISCLAIMED, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF TITLE, MERCHANTABILITY, AGAINST INFRINGEMENT, AND FITNESS
# FOR A PARTICULAR PURPOSE.
#
##############################################################################
name = 'polyspecdoctestumentation'
version = '1.0.0.dev0'

from setuptools import setup

setup(
    name = name,
    version = version,
    author = "polyspec Contributors",
    description = "polyspec tests and documentation",
    license = "ZPL 2.1",
    long_description=open('README.txt').read(),

    packages = ['polyspecdoctestumentation'],
    package_dir = {'':'src'},
    package_data = {'polyspecdoctestumentation': ['*.txt', '*.test', '*.ini']},
    install_requires = ['manuel', 'mpmath', 'polyspec', 'zope.testing'],
    )
