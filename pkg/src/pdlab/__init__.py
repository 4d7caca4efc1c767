"""Poisson-Dirichlet asymptotics lab: exact laws, large-deviation rate
functions, and a verification harness for the large-mutation-rate limits."""

__version__ = "0.1.0"
