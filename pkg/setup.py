"""
Setup script for the Riemannian adaptive cubic regularization solver.
"""
from setuptools import setup, find_packages

setup(
    name="riemannian-arc",
    version="0.1.0",
    description="Derivative-free adaptive cubic regularization on Riemannian manifolds",
    packages=find_packages(exclude=["tests", "tests.*", "scripts"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "prometheus-client>=0.17.1",
        "tabulate>=0.9.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "hypothesis>=6.80",
            "black>=23.7.0",
            "flake8>=6.1.0",
            "mypy>=1.5.1",
        ],
    },
    entry_points={
        "console_scripts": [
            "rarc=client.cli:main",
        ],
    },
    python_requires=">=3.9",
)
