"""
Derivative-free adaptive cubic regularization on manifolds.
"""
