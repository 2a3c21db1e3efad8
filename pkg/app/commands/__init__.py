# This file marks the commands directory as a Python package
