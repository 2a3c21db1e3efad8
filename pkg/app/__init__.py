# This file marks the root directory as a Python package 