"""
Seeded benchmark problems with known optima.
"""
