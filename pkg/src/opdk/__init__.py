"""Exact-arithmetic constructions for simplicial modules, connective chain
complexes, colored operads and the normalization comparison maps between them.

Everything here computes over Z, Q or Z/p with no floats anywhere: answers
are ranks, invariant factors, explicit matrices and yes/no verdicts.
"""

__version__ = "0.1.0"
