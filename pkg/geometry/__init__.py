"""
Manifold geometry and dense linear-algebra kernels.
"""
