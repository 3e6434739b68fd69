"""twistmoments: moments of quadratic-twist Dirichlet L-functions over
arithmetic progressions, their predicted main terms, and exact-identity
verifiers (Gauss sums, Poisson summation, approximate functional equations,
Euler products).
"""

__version__ = "0.1.0"
