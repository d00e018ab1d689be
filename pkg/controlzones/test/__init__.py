import importlib
import inspect
import os
import re
import shutil
import tempfile
import unittest


class ControlZonesTestCase(unittest.TestCase):
    """ Creates a temporary output directory for each test """

    def setUp(self):
        from controlzones import exceptions
        from controlzones.conf import Config

        self.exceptions = exceptions
        self.work_dir = tempfile.mkdtemp(prefix='python-controlzones-')
        self.config = Config({'OUT': os.path.join(self.work_dir, 'out')})

    def tearDown(self):
        shutil.rmtree(self.work_dir)

    def path(self, *parts):
        return os.path.join(self.work_dir, *parts)

    def write_file(self, name, text):
        path = self.path(name)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        return path


SUITE_DIR = os.path.dirname(__file__)
TEST_MODULE_RE = re.compile(r'^test_(\w+)\.py$')


def suite_modules():
    """
    Yields ``(suite name, module name)`` for every test module, in name
    order. A suite is either ``test/test_<name>.py`` or
    ``test/<name>/tests.py``.
    """
    for entry in sorted(os.listdir(SUITE_DIR)):
        if os.path.isfile(os.path.join(SUITE_DIR, entry, 'tests.py')):
            yield entry, 'controlzones.test.{}.tests'.format(entry)
            continue
        match = TEST_MODULE_RE.match(entry)
        if match:
            yield match.group(1), 'controlzones.test.' + entry[:-3]


def module_suite(name, module):
    """
    The module's own ``suite()`` if it has one, otherwise every TestCase
    defined in it. The suite is tagged with its name and module.
    """
    if hasattr(module, 'suite'):
        suite = module.suite()
    else:
        loader = unittest.defaultTestLoader
        cases = [obj for obj in vars(module).values()
                 if inspect.isclass(obj)
                 and issubclass(obj, unittest.TestCase)
                 and obj.__module__ == module.__name__]
        suite = unittest.TestSuite(
            loader.loadTestsFromTestCase(case)
            for case in sorted(cases, key=lambda c: c.__name__))
    suite.name = name
    suite.module = module
    return suite


def get_all_suites():
    for name, module_name in suite_modules():
        yield module_suite(name, importlib.import_module(module_name))


def default_suite():
    return unittest.TestSuite(get_all_suites())


class TestLoader(unittest.TestLoader):
    """
    Resolves ``<suite>`` and ``<suite>.<TestCase>[.<method>]`` names, e.g.
    ``run-tests.py quality.GainTest``.
    """
    def loadTestsFromName(self, name, module=None):
        if name == 'suite':
            return default_suite()
        suite_name, _, rest = name.partition('.')
        for suite in get_all_suites():
            if suite.name != suite_name:
                continue
            if not rest:
                return suite
            return super(TestLoader, self).loadTestsFromName(rest,
                                                             suite.module)
        raise LookupError('could not find test case for "{}"'.format(name))


def load_tests(loader, tests, pattern):
    return default_suite()


def main():
    """Runs every suite, or the ones named on the command line."""
    unittest.main(__name__, testLoader=TestLoader(), defaultTest='suite')
