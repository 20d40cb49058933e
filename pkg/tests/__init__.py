"""
Test suite for the Novikov lab
"""
