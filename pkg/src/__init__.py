"""
Novikov Lab: numerical laboratory for the Novikov equation on the circle
"""

__version__ = "0.1.0"
