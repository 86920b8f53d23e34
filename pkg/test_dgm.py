"""Runs every test module of the tests directory

    python test_dgm.py [-v]

"""

import glob
from importlib import util
import os
import sys
import unittest

tests_path = os.path.join(os.path.dirname(os.path.realpath(__file__)),
                          'tests')


def _load_module(path):

    module_name, _ = os.path.splitext(os.path.basename(path))
    spec = util.spec_from_file_location(module_name, path)
    module = util.module_from_spec(spec)
    spec.loader.exec_module(module)

    return module


def load_tests(loader, *args):

    suite = unittest.TestSuite()

    for path in sorted(glob.glob(os.path.join(tests_path, 'test_*.py'))):
        suite.addTest(loader.loadTestsFromModule(_load_module(path)))

    return suite


if __name__ == '__main__':
    verbosity = 2 if '-v' in sys.argv[1:] else 1
    result = unittest.TextTestRunner(verbosity=verbosity).run(
        load_tests(unittest.defaultTestLoader))
    sys.exit(not result.wasSuccessful())
