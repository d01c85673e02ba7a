"""Discrete Aubry-Mather tools on the two-torus.

Mather's alpha function of a Lagrangian on ``T^2`` is approximated by a
minimum mean cycle on a finite action graph.  On top of that the package
computes weak KAM pairs, Aubry and Mather set estimates, the conjugate
``beta``, faces of ``alpha`` and the homological spaces attached to them.
"""
from .lagrangian import (CohomologyClass, ConstantField, CosineField, HomologyClass,
                         LagrangianSpec, ModelError, TabulatedField, TrigPolynomial, load_spec,
                         pair, random_trig_potential, speed_bound, step_action)
from .graph import (ActionGraph, Cycle, StencilError, StencilSaturationWarning, build_graph,
                    brute_force_min_mean, edge_cost, export_adjacency, reweighted_costs)
from .mincycle import karp, solve_action_graph
from .weak_kam import (AlphaValue, AubryEstimate, WeakKAMError, WeakKAMPair, alpha,
                       aubry_estimate, default_epsilon, fenchel_attainment_check,
                       mather_estimate, peierls, weak_kam_pair)
from .homology import E_dimension, G_dimension, homology_of_neighborhood
from .faces import (AlphaSurface, BetaSample, FaceReport, alpha_surface, beta,
                    differentiability_directions, face_at, flat_half_width,
                    irrationality_dimension, subderivative_density_probe)
from .experiments import (ChainReport, aubry_monotone_check, chain_report, mane_sweep,
                          semicontinuity_probe)

__version__ = "0.1.0"
