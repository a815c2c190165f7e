"""Collect the zope-style doctest suite for pytest.

The tests live in polyspecdoctestumentation/src/polyspecdoctestumentation/
and are exposed through ``tests.test_suite()`` (run natively by
zope.testrunner).  This hook turns each test in that suite into a pytest
item; it does not alter the tests.
"""
import os
import sys
import unittest

import pytest


_DOCS_SRC = os.path.join(os.path.dirname(__file__),
                         'polyspecdoctestumentation', 'src')
if _DOCS_SRC not in sys.path:
    sys.path.insert(0, _DOCS_SRC)


def _flatten(suite):
    for test in suite:
        if isinstance(test, unittest.TestSuite):
            for sub in _flatten(test):
                yield sub
        else:
            yield test


class DocSuiteFile(pytest.File):

    def collect(self):
        from polyspecdoctestumentation import tests
        for test in _flatten(tests.test_suite()):
            name = os.path.basename(str(test.id()))
            yield DocSuiteItem.from_parent(self, name=name, test=test)


class DocSuiteItem(pytest.Item):

    def __init__(self, *, test, **kw):
        super().__init__(**kw)
        self.test = test

    def runtest(self):
        result = unittest.TestResult()
        self.test.run(result)
        problems = result.errors + result.failures
        if problems:
            raise DocSuiteFailure('\n'.join(text for _, text in problems))

    def repr_failure(self, excinfo):
        if isinstance(excinfo.value, DocSuiteFailure):
            return str(excinfo.value)
        return super().repr_failure(excinfo)

    def reportinfo(self):
        return self.path, None, self.name


class DocSuiteFailure(Exception):
    pass


def pytest_collect_file(parent, file_path):
    if (file_path.name == 'tests.py'
            and file_path.parent.name == 'polyspecdoctestumentation'):
        return DocSuiteFile.from_parent(parent, path=file_path)
