"""
Flats of alpha and the inclusion chain
======================================

Near zero the pendulum's alpha is constant along omega1: rotating
horizontally costs nothing until the class pays for crossing the
potential hill.  We measure the flat, recover it from beta, and compare
the four homological dimensions at omega = 0.
"""
import math
import warnings

from amlab import (alpha_surface, beta, build_graph, chain_report, face_at, flat_half_width,
                   load_spec)

warnings.simplefilter("ignore", UserWarning)

g = build_graph(load_spec("pendulum(1)"), 32, 0.1, 1.6)

###############################################################################
# Face detection probes alpha along several directions at a ladder of radii.
face = face_at(g, (0.0, 0.0))
print("dim Vect F =", face.dim_vect_F, "integer basis", face.integer_basis)

w = flat_half_width(g, (0.0, 0.0), (1.0, 0.0), iterations=20)
print("flat half-width %.4f, closed form 4/pi = %.4f" % (w, 4 / math.pi))

###############################################################################
# beta is the discrete conjugate of a sampled alpha; at h = 0 its argmax is
# the whole flat, a horizontal segment.
surf = alpha_surface(g, 1.6, 16)
b = beta(surf, (0.0, 0.0))
print("argmax segment length %.3f (8/pi = %.3f), dim %d" % (b.segment_length, 8 / math.pi, b.dim_F_h))

###############################################################################
# The chain E <= Vect F <= G <= V-perp, all of dimension one here.
rep = chain_report(g, (0.0, 0.0))
print("dims (E, F, G, Vperp):", rep.dims)
print(rep.inclusion_verdicts)
