import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse
from scipy.sparse.linalg import eigsh

from glsurface.linkform import Axis, GLObjective, StructuredGrid, assemble
from glsurface.numcore import gradient_check


def _rect(n1, n2, L1, L2, lo="dirichlet", hi="dirichlet"):
    return StructuredGrid(
        axes=(Axis(np.linspace(0, L1, n1), lo, hi), Axis(np.linspace(0, L2, n2), lo, hi)),
        frame=np.eye(2))


def _lowest(form):
    d = sparse.diags(1 / np.sqrt(form.mass))
    vals = eigsh(d @ form.matrix @ d, k=1, sigma=0, which="LM", return_eigenvectors=False)
    return float(vals[0].real)


def test_axis_validation():
    with pytest.raises(ValueError):
        Axis(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ValueError):
        Axis(np.linspace(0, 1, 5), "periodic", "neumann")
    with pytest.raises(ValueError):
        Axis(np.linspace(0, 1, 5), "robin", "neumann")
    with pytest.raises(ValueError):
        Axis(np.arange(5) * 0.2, "periodic", "periodic")


def test_grid_rejects_singular_frame():
    with pytest.raises(ValueError):
        StructuredGrid(axes=(Axis(np.linspace(0, 1, 3)), Axis(np.linspace(0, 1, 3))),
                       frame=np.zeros((2, 2)))


def test_neumann_constant_in_kernel():
    form = assemble(_rect(11, 9, 1.0, 2.0, "neumann", "neumann"))
    v = np.ones(form.n_free)
    assert form.quadratic(v) == pytest.approx(0.0, abs=1e-12)
    assert form.l2(v) == pytest.approx(2.0)


def test_dirichlet_square_eigenvalue():
    form = assemble(_rect(81, 81, 1.0, 1.0))
    assert _lowest(form) == pytest.approx(2 * np.pi**2, rel=1e-3)


def test_periodic_plane_wave():
    L, n = 2.0, 40
    ax = Axis(np.arange(n) * L / n, "periodic", "periodic", period=L)
    grid = StructuredGrid(axes=(ax,), frame=np.eye(1))
    form = assemble(grid)
    x = ax.nodes
    v = np.exp(2j * np.pi * x / L)
    h = L / n
    expected = (2 / h * np.sin(np.pi * h / L)) ** 2 * L
    assert form.quadratic(v) == pytest.approx(expected, rel=1e-12)


def test_matrix_hermitian():
    grid = StructuredGrid(
        axes=(Axis(np.linspace(0, 2, 9), "neumann", "dirichlet"), Axis(np.linspace(-1, 1, 7))),
        frame=np.array([[1.0, 0.0], [0.4, 1.0]]))
    form = assemble(grid, vector_potential=lambda x: np.stack([-x[..., 1], x[..., 0]], -1) * 0.5)
    a = form.matrix
    assert abs(a - a.conj().T).max() <= 1e-13


def test_landau_level():
    # constant unit field, large Dirichlet square: bottom of spectrum -> 1
    form = assemble(_rect(121, 121, 12.0, 12.0),
                    vector_potential=lambda x: np.stack([np.zeros(x.shape[:-1]), x[..., 0]], -1))
    assert _lowest(form) == pytest.approx(1.0, abs=5e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**32 - 1))
def test_gauge_invariance_linear_chi(shear, c1, c2, seed):
    rng = np.random.default_rng(seed)
    grid = StructuredGrid(
        axes=(Axis(np.linspace(0, 2, 7), "neumann", "dirichlet"),
              Axis(np.linspace(-1, 1, 6), "neumann", "neumann"),
              Axis(np.linspace(0, 1, 5), "dirichlet", "neumann")),
        frame=np.array([[1.0, 0, 0], [shear, 1.0, 0], [0, 0.3, 1.2]]))
    a = lambda x: np.stack([0.2 * x[..., 2], -x[..., 0], 0.7 * x[..., 1]], -1)
    grad_chi = np.array([c1, c2, 0.5])
    form0 = assemble(grid, vector_potential=a)
    form1 = assemble(grid, vector_potential=lambda x: a(x) - grad_chi)
    pos = grid.positions().reshape(-1, 3)[form0.free]
    v = rng.standard_normal(form0.n_free) + 1j * rng.standard_normal(form0.n_free)
    w = v * np.exp(1j * pos @ grad_chi)
    assert form1.quadratic(w) == pytest.approx(form0.quadratic(v), rel=1e-11)


@pytest.mark.parametrize("b", [0.6, 0.9])
def test_objective_gradient_and_delta(b):
    rng = np.random.default_rng(0)
    grid = _rect(12, 10, 2.0, 1.5, "neumann", "dirichlet")
    form = assemble(grid, vector_potential=lambda x: np.stack([-x[..., 1], x[..., 0]], -1))
    obj = GLObjective(form, b)
    for _ in range(10):
        v = rng.standard_normal(form.n_free) + 1j * rng.standard_normal(form.n_free)
        assert gradient_check(obj.energy, obj.gradient, v, rng) <= 1e-5
        w = v + 1e-3 * rng.standard_normal(v.size)
        assert obj.delta(v, w) == pytest.approx(obj.energy(w) - obj.energy(v), rel=1e-7)


def test_objective_zero_state():
    form = assemble(_rect(5, 5, 1.0, 1.0))
    obj = GLObjective(form, 0.7)
    z = np.zeros(form.n_free, complex)
    assert obj.energy(z) == 0.0
    assert not np.any(obj.gradient(z))
