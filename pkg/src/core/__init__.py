"""
Numerical core: spectral calculus, solvers, invariants and analyticity tools
"""
