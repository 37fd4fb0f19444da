"""Thermal operations, thermomajorisation geometry, and simplex control systems.

The package is organised in layers:

* :mod:`thermoctrl.core` -- dense linear-algebra substrate (simplex vectors,
  Gibbs vectors, superoperators, matrix exponential, generalized partial
  trace).
* :mod:`thermoctrl.thermomaj` -- thermomajorisation curves, d-majorisation
  predicates, the majorisation polytope and its extreme points, transition
  matrix synthesis.
* :mod:`thermoctrl.gksl` -- GKSL dissipators, thermal ladder operators,
  dilation-based generator construction, wedge membership checks.
* :mod:`thermoctrl.qubit` -- exact single-qubit thermal map algebra
  (parametrization, semigroup, composition law, region sampling).
* :mod:`thermoctrl.toymodel` -- the hybrid permutation/relaxation control
  system on the probability simplex and its convex reachability bounds.
* :mod:`thermoctrl.qutrit` -- exact three-level stabilisable sets, extremal
  vector fields, and reachable-set geometry.
* :mod:`thermoctrl.cli` -- command line front end emitting CSV/JSON data and
  matplotlib figures.
"""

from .core import (
    ALG_TOL,
    GEO_TOL,
    GibbsVector,
    ProbVector,
    Superoperator,
    ad,
    expm,
    gibbs_vector,
    partial_trace_wrt,
)

__all__ = [
    "ALG_TOL",
    "GEO_TOL",
    "GibbsVector",
    "ProbVector",
    "Superoperator",
    "ad",
    "expm",
    "gibbs_vector",
    "partial_trace_wrt",
]

__version__ = "0.1.0"
