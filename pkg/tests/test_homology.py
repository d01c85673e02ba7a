import numpy as np
import pytest

from amlab import E_dimension, G_dimension, aubry_estimate, homology_of_neighborhood, weak_kam_pair
from amlab.homology import band_windings, primitive
from amlab.weak_kam import AubryEstimate


def _est(mask, N):
    return AubryEstimate(np.asarray(mask, bool).reshape(-1), 0.0, [], N)


def test_flat_everything(flat32):
    aub = aubry_estimate(weak_kam_pair(flat32, (0, 0)))
    assert homology_of_neighborhood(aub) == (2, [(1, 0), (0, 1)])
    assert E_dimension(aub) == 0
    assert G_dimension(aub) == 0


def test_pendulum_column(pend32):
    aub = aubry_estimate(weak_kam_pair(pend32, (0, 0)))
    assert homology_of_neighborhood(aub, pend32) == (1, [(0, 1)])
    assert E_dimension(aub, pend32) == 1
    assert G_dimension(aub, pend32) == 1


def test_empty_and_blob():
    N = 16
    empty = _est(np.zeros(N * N), N)
    assert homology_of_neighborhood(empty) == (0, [])
    assert E_dimension(empty) == 2 and G_dimension(empty) == 2
    blob = np.zeros((N, N), bool)
    blob[4:8, 5:9] = True
    b = _est(blob, N)
    assert homology_of_neighborhood(b)[0] == 0
    assert E_dimension(b) == 2 and G_dimension(b) == 2


def test_diagonal_band_primitive():
    N = 12
    m = np.zeros((N, N), bool)
    for t in range(N):
        m[t, t] = True
    dim, basis = homology_of_neighborhood(_est(m, N))
    assert (dim, basis) == (1, [(1, 1)])
    m2 = np.zeros((N, N), bool)
    for t in range(N):
        m2[t, (2 * t) % N] = True
        m2[t, (2 * t + 1) % N] = True
    assert homology_of_neighborhood(_est(m2, N)) == (1, [(1, 2)])


def test_row_plus_column_spans_everything():
    N = 10
    m = np.zeros((N, N), bool)
    m[3, :] = True
    m[:, 6] = True
    assert homology_of_neighborhood(_est(m, N))[0] == 2
    assert E_dimension(_est(m, N)) == 0


def test_critical_links_close_loops():
    # two nodes joined by long jumps that wind once in x1
    N = 16
    m = np.zeros(N * N, bool)
    m[0] = m[8 * N] = True
    links = np.array([[0, 8 * N, 8, 0], [8 * N, 0, 8, 0]])
    assert band_windings(m, N).shape[0] == 0
    w = band_windings(m, N, links)
    assert homology_of_neighborhood(_est(m, N), links=links) == (1, [(1, 0)])
    assert np.abs(w).sum() > 0


def test_primitive():
    assert primitive((4, -6)) == (2, -3)
    assert primitive((-3, 0)) == (1, 0)
    assert primitive((0, -5)) == (0, 1)
    assert primitive((0, 0)) == (0, 0)
