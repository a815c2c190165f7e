##############################################################################
#
# Copyright polyspec Contributors.
# All Rights Reserved.
#
# This software is subject to the provisions of the Zope Public License,
# Version 2.0 (ZPL).  A copy of the ZPL should accompany this distribution.
# THIS SOFTWARE IS PROVIDED "AS IS" AND ANY AND ALL EXPRESS OR IMPLIED
# WARRANTIES ARE DISCLAIMED, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF TITLE, MERCHANTABILITY, AGAINST INFRINGEMENT, AND FITNESS
# FOR A PARTICULAR PURPOSE.
#
##############################################################################

from zope.testing import setupstack, renormalizing
import doctest
import manuel.capture
import manuel.doctest
import manuel.testing
import os
import polyspec
import re
import unittest

def setUp(test):
    setupstack.setUpDirectory(test)

    saved = os.environ.pop(polyspec.THREADS_ENVIRONMENT_VARIABLE, None)
    def restore():
        os.environ.pop(polyspec.THREADS_ENVIRONMENT_VARIABLE, None)
        if saved is not None:
            os.environ[polyspec.THREADS_ENVIRONMENT_VARIABLE] = saved
    setupstack.register(test, restore)

    test.globs['close'] = close

def close(a, b, tolerance=1e-9):
    """True when a and b agree to a relative tolerance."""
    return bool(abs(a - b) <= tolerance * max(1.0, abs(a), abs(b)))


def test_suite():
    options = (doctest.ELLIPSIS | doctest.NORMALIZE_WHITESPACE |
               doctest.IGNORE_EXCEPTION_DETAIL)
    float_normalizer = renormalizing.RENormalizing([
        (re.compile(r'(\d\.\d{6})\d+'), r'\1'),
        ])
    suite = unittest.TestSuite((
        manuel.testing.TestSuite(
            manuel.doctest.Manuel(optionflags=options,
                                  checker=float_normalizer) +
            manuel.capture.Manuel(),
            'index.txt',
            setUp=setUp, tearDown=setupstack.tearDown),
        doctest.DocFileSuite(
            'config.test', 'polygeom.test', 'meshgen.test', 'fem.test',
            'hessian.test', 'interval.test', 'certify.test',
            'stability.test', 'bounds.test', 'torsion.test',
            'descent.test',
            optionflags=options,
            setUp=setUp, tearDown=setupstack.tearDown,
            checker=float_normalizer),
        doctest.DocFileSuite(
            'cli.test',
            optionflags=options,
            setUp=setUp, tearDown=setupstack.tearDown,
            checker=renormalizing.RENormalizing([
                (re.compile('usage:'), 'Usage:'),
                (re.compile('options:'), 'Options:'),
                ])
            ),
        ))

    acceptance = doctest.DocFileSuite(
        'acceptance.test',
        optionflags=options,
        setUp=setUp, tearDown=setupstack.tearDown)
    acceptance.level = 2
    suite.addTest(acceptance)
    return suite
