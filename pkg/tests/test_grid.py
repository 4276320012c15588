import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kscollapse.grid import (DIRICHLET_ZERO, Grid, GridError, WField,
                             build_grid, differentiate)


def test_uniform_nodes():
    g = build_grid(5, 1.0, 0.2, "uniform")
    assert g.nodes == pytest.approx([0.2, 0.4, 0.6, 0.8, 1.0])


def test_geometric_tiny_explicit_ratio():
    g = build_grid(3, 1.0, 0.25, "geometric", ratio=2.0)
    assert g.nodes == pytest.approx([0.25, 0.5, 1.0])


def test_geometric_ratio_solved():
    g = build_grid(400, 1.0, 1e-8, "geometric")
    cells = g.cells()
    # constant cell ratio and exact coverage
    ratios = cells[1:] / cells[:-1]
    assert np.all(np.abs(ratios - g.ratio) < 1e-9 * g.ratio)
    assert abs(cells.sum() - (1.0 - 1e-8)) < 1e-12
    assert g.nodes[0] == 1e-8 and g.nodes[-1] == 1.0
    # first cell width equals s_min by construction
    assert cells[0] == pytest.approx(1e-8, rel=1e-9)


def test_grid_validation():
    with pytest.raises(GridError):
        build_grid(16, 1.0, 0.0, "uniform")
    with pytest.raises(GridError):
        Grid(np.array([0.1, 0.1, 0.5]), "uniform", 1.0)


def test_differentiate_affine_exact():
    g = build_grid(64, 1.0, 1e-4, "geometric")
    f = WField(g, 2.0 * g.nodes + 0.3, 0.0, DIRICHLET_ZERO)
    ws, wss = differentiate(f)
    assert np.allclose(ws, 2.0, rtol=0, atol=1e-11)
    assert np.max(np.abs(wss)) < 1e-6  # scaled by 1/h^2 roundoff near s_min


def test_differentiate_quadratic_uniform():
    g = build_grid(33, 1.0, 0.01, "uniform")
    f = WField(g, g.nodes**2, 0.0, DIRICHLET_ZERO)
    ws, wss = differentiate(f)
    assert ws == pytest.approx(2.0 * g.nodes, rel=1e-12)
    assert wss == pytest.approx(np.full_like(g.nodes, 2.0), rel=1e-9)


def test_differentiate_cubic_geometric_order():
    # error at a fixed node shrinks at >= second order under refinement
    errs = []
    for M in (65, 129, 257):
        g = build_grid(M, 1.0, 1e-3, "geometric")
        f = WField(g, g.nodes**3, 0.0, DIRICHLET_ZERO)
        ws, _ = differentiate(f)
        i = np.argmin(np.abs(g.nodes - 0.5))
        errs.append(abs(ws[i] - 3.0 * g.nodes[i] ** 2))
    order = np.log2(errs[0] / errs[2]) / 2.0
    assert order >= 1.9


def test_refinement_ratio_sin():
    errm = {}
    for M in (101, 201):
        g = build_grid(M, 1.0, 1e-3, "uniform")
        f = WField(g, np.sin(g.nodes), 0.0, DIRICHLET_ZERO)
        ws, _ = differentiate(f)
        errm[M] = np.max(np.abs(ws - np.cos(g.nodes)))
    ratio = errm[101] / errm[201]
    assert 3.5 <= ratio <= 4.5


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-4, 1.0), min_size=5, max_size=40, unique=True))
def test_affine_exact_on_random_meshes(nodes):
    nodes = np.sort(np.asarray(nodes))
    if nodes.size < 5 or np.any(np.diff(nodes) < 1e-9):
        return
    g = Grid(nodes / nodes[-1] * 1.0, "uniform", 1.0)
    f = WField(g, -1.5 * g.nodes + 0.7, 0.0, DIRICHLET_ZERO)
    ws, wss = differentiate(f)
    assert np.allclose(ws, -1.5, atol=1e-8)


def test_field_bounds_check(p_unit):
    g = build_grid(16, 1.0, 1e-3, "uniform")
    w = np.linspace(0, 1, 16)
    f = WField(g, w, 0.0, DIRICHLET_ZERO)
    assert f.check_bounds(1.0) == 0.0
    w2 = w.copy()
    w2[5] = 1.2
    assert WField(g, w2, 0.0, DIRICHLET_ZERO).check_bounds(1.0) == pytest.approx(0.2)
