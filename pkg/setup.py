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
from setuptools import setup


name = 'polyspec'
version = '1.0.0.dev0'

entry_points = """
[console_scripts]
polyspec = polyspec.cli:main
"""


def read(fname):
    with open(fname) as f:
        return f.read()


setup(
    name=name,
    version=version,
    author="polyspec Contributors",
    description=("Certified Dirichlet eigenvalue derivatives of polygons "
                 "with finite elements"),
    license="ZPL 2.1",
    keywords=["finite elements", "eigenvalues", "shape optimization",
              "interval arithmetic"],
    long_description=read('README.rst') + '\n\n' + read('CHANGES.rst'),
    packages=['polyspec'],
    package_dir={'': 'src'},
    python_requires='>=3.9',
    install_requires=["numpy >= 1.22", "scipy >= 1.12", "mpmath"],
    extras_require={
        'docs': ["Sphinx"],
        'test': ["manuel", "zope.testing"],
    },
    entry_points=entry_points,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: Zope Public License",
        "Natural Language :: English",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    zip_safe=False,
)
