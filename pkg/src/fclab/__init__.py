"""Exact multi-variable formal series with rational exponents and log powers,
delta-kernel identity verification, branch-indexed evaluation, convergence
probing, and a rank-one free-boson operator testbed."""

__version__ = "0.1.0"
