"""
Script utilities for the mesostruct package
"""
