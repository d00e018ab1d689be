#!/usr/bin/env python
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from controlzones.test import main

if __name__ == '__main__':
    main()
