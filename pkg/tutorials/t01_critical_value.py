"""
Critical values and weak KAM pairs
==================================

A pendulum on the torus has its critical value at the top of the
potential: the cheapest way to stay put forever is to sit where the
potential is largest.  We check this on the action graph and look at
the weak KAM pair that certifies it.
"""
import warnings

import numpy as np

from amlab import alpha, aubry_estimate, build_graph, load_spec, mather_estimate, weak_kam_pair

warnings.simplefilter("ignore", UserWarning)

L = load_spec("pendulum(1)")
g = build_graph(L, 32, 0.1, 1.6)
print(g.n_nodes, "nodes,", g.offsets.shape[0], "stencil offsets")

###############################################################################
# alpha(0) is minus the minimum mean cost per unit time over closed walks.
a = alpha(g, (0.0, 0.0))
print("alpha(0) =", a.value)
for m in mather_estimate(a)[:3]:
    print("  critical cycle: period", m["period"], "rotation", m["rotation"].rotation)

###############################################################################
# The pair u+ <= u- touches exactly on the Aubry set.  For the pendulum the
# potential is cos(2 pi x1), so that set is the column x1 = 0.
pair = weak_kam_pair(g, (0.0, 0.0))
print("domination residuals:", pair.residuals)
aub = aubry_estimate(pair)
cols = np.unique(np.argwhere(aub.nodes.reshape(g.N, g.N))[:, 0])
print("Aubry estimate occupies x1 columns", cols / g.N)
