"""
Random perturbations and uniqueness of minimizers
=================================================

Adding a small random potential to the flat Lagrangian should usually
leave a single minimizing cycle per cohomology class.  On the discrete
torus translated copies of a straight cycle can tie exactly, because a
low degree trigonometric polynomial averages to the same value over
every coset of the lattice the cycle visits.  The sweep below makes the
effect visible.
"""
import warnings

import numpy as np

from amlab import alpha, build_graph, load_spec, mane_sweep, random_trig_potential

warnings.simplefilter("ignore", UserWarning)

rep = mane_sweep(load_spec("flat"), seed=0, amplitude=0.1, omega_max=1.0, M=5, N=32)
print("single-cycle fraction %.3f over %d classes" % (rep.fraction, rep.n_samples))
print("one rotation class on %.3f of them" % rep.rotation_fraction)
print("exceptional classes:", rep.exceptional[:6], "...")

###############################################################################
# Look at one exceptional class: its critical cycles share a rotation vector
# and differ by a lattice translation.
if rep.exceptional:
    L = load_spec("flat").plus_potential(random_trig_potential(0, amplitude=0.1))
    g = build_graph(L, 32, 0.1, np.sqrt(2.0))
    a = alpha(g, rep.exceptional[0])
    for c in a.critical_cycles[:4]:
        print("cycle of length", len(c.nodes), "rotation", c.rotation.rotation,
              "starting at node", min(c.nodes))
