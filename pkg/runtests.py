#!/usr/bin/env python

"""
This suite runs tests with unittest discovery.
Usage: python runtests.py [test labels]. Labels are module or test names like tests.test_freq.
Set SPIKELAB_SLOW=1 to run desk-scale training and long simulations.
"""

import logging.config
import os
import sys
import unittest

import numpy as np

if __name__ == "__main__":
    print('Python: ', sys.version)
    print('Numpy: ', np.__version__)

    # Add the src directory to sys.path
    curdir = os.path.dirname(os.path.realpath(__file__))
    sys.path.insert(0, curdir + "/src")
    sys.path.insert(0, curdir)

    from tests.settings import LOGGING, SLOW_TESTS
    logging.config.dictConfig(LOGGING)
    print('Slow tests: ', 'on' if SLOW_TESTS else 'off')

    loader = unittest.TestLoader()
    if len(sys.argv) > 1:
        suite = loader.loadTestsFromNames(sys.argv[1:])
    else:
        suite = loader.discover('tests', top_level_dir=curdir)

    result = unittest.TextTestRunner(verbosity=1).run(suite)
    sys.exit(not result.wasSuccessful())
