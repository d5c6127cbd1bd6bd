import math

import numpy as np
import pytest

import hydride as hy
from hydride.errors import DomainError, FieldError
from hydride.grid import (boundary_integrate, cellwise_grad_sq, h1_seminorm_sq,
                          integrate, norm_l2, read_field_text,
                          write_field_csv, write_field_text)

from oracles import dense_robin, dense_zero_flux


def test_grid_validation():
    with pytest.raises(DomainError):
        hy.Grid.box([4, 4, 4, 4])
    with pytest.raises(DomainError):
        hy.Grid(cells=(4,), spacing=(-0.1,))
    g = hy.Grid.box([8, 4], [2.0, 1.0])
    assert g.spacing == (0.25, 0.25)
    assert g.cell_volume == pytest.approx(0.0625)
    assert g.lengths == (2.0, 1.0)


def test_field_checks():
    g = hy.Grid.box([4])
    with pytest.raises(FieldError):
        g.check_field(np.zeros(5))
    with pytest.raises(FieldError):
        g.check_field(np.array([1.0, np.nan, 0.0, 0.0]))


def test_zero_flux_kills_constants():
    g = hy.Grid.box([5, 3])
    lap = hy.ZeroFluxLaplacian(g)
    out = lap.apply(g.new_field(3.7))
    assert np.abs(out).max() == 0.0


def test_two_cell_hand_stencil():
    g = hy.Grid(cells=(2,), spacing=(1.0,))
    lap = hy.ZeroFluxLaplacian(g)
    out = lap.apply(np.array([0.0, 1.0]))
    assert out == pytest.approx([-1.0, 1.0])


@pytest.mark.parametrize("cells", [(7,), (5, 4), (4, 3, 5)])
def test_operator_matches_dense_oracle(cells):
    g = hy.Grid.box(cells)
    lap = hy.ZeroFluxLaplacian(g)
    dense = dense_zero_flux(g)
    rng = np.random.default_rng(1)
    for _ in range(3):
        v = rng.normal(size=g.shape)
        assert np.abs(lap.apply(v).ravel() - dense @ v.ravel()).max() < 1e-11


def test_symmetry_of_zero_flux():
    g = hy.Grid.box([6, 5])
    lap = hy.ZeroFluxLaplacian(g)
    rng = np.random.default_rng(2)
    for _ in range(5):
        v = rng.normal(size=g.shape)
        w = rng.normal(size=g.shape)
        lhs = integrate(g, lap.apply(v) * w)
        rhs = integrate(g, v * lap.apply(w))
        assert abs(lhs - rhs) <= 1e-12 * norm_l2(g, v) * norm_l2(g, w)


def test_kernel_is_exactly_constants():
    g = hy.Grid.box([4, 3])
    dense = dense_zero_flux(g)
    assert np.linalg.matrix_rank(dense, tol=1e-10) == g.n_cells - 1
    _, _, vt = np.linalg.svd(dense)
    null = vt[-1].reshape(g.shape)
    assert null.max() - null.min() <= 1e-12 * np.abs(null).max()


def test_robin_hand_example_and_degeneration():
    g = hy.Grid(cells=(2,), spacing=(1.0,))
    rob = hy.RobinLaplacian(g, gamma=1.0)
    c = 2.5
    out = rob.apply(np.full(2, c))
    assert out == pytest.approx([c, c])
    rob0 = hy.RobinLaplacian(g, gamma=0.0)
    lap = hy.ZeroFluxLaplacian(g)
    v = np.array([0.3, -1.2])
    assert rob0.apply(v) == pytest.approx(lap.apply(v))


def test_robin_spd_dense_oracle():
    g = hy.Grid.box([4, 4])
    dense = dense_robin(g, 1.0)
    eig = np.linalg.eigvalsh(dense)
    assert eig[0] > 0.0
    # frozen coercivity constant of this grid, asserted stable
    assert eig[0] == pytest.approx(3.7509690068058132, rel=1e-9)
    lap = hy.RobinLaplacian(g, 1.0)
    rng = np.random.default_rng(4)
    for _ in range(5):
        v = rng.normal(size=g.shape)
        assert integrate(g, lap.apply(v) * v) >= eig[0] * norm_l2(g, v) ** 2 * 0.999


def test_quadrature_examples():
    g = hy.Grid.box([8])
    assert integrate(g, g.new_field(1.0)) == pytest.approx(1.0)
    assert boundary_integrate(g, g.new_field(1.0)) == pytest.approx(2.0)
    assert hy.norm_l1(g, g.new_field(-2.0)) == pytest.approx(2.0)
    assert hy.norm_linf(g, np.linspace(-3, 1, 8).reshape(g.shape)) == 3.0
    g3 = hy.Grid.box([4, 4, 4])
    assert integrate(g3, g3.new_field(1.0)) == pytest.approx(1.0)
    assert boundary_integrate(g3, g3.new_field(1.0)) == pytest.approx(6.0)


def test_h1_seminorm_matches_operator_form():
    g = hy.Grid.box([6, 7])
    lap = hy.ZeroFluxLaplacian(g)
    rng = np.random.default_rng(6)
    for _ in range(5):
        v = rng.normal(size=g.shape)
        assert h1_seminorm_sq(g, v) == pytest.approx(
            integrate(g, lap.apply(v) * v), abs=1e-12)


def test_interior_second_order_convergence():
    # applying the stencil to samples of cos(pi x) converges to -lap at
    # second order in the interior
    errs = []
    for n in (32, 64, 128):
        g = hy.Grid.box([n])
        lap = hy.ZeroFluxLaplacian(g)
        x = g.axis_centers(0)
        v = np.cos(np.pi * x)
        exact = np.pi**2 * np.cos(np.pi * x)
        err = np.abs(lap.apply(v) - exact)[2:-2].max()
        errs.append(err)
    orders = [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    assert min(orders) > 1.9


def test_cellwise_grad_sq_nonnegative_and_consistent():
    g = hy.Grid.box([32])
    x = g.axis_centers(0)
    v = np.cos(np.pi * x)
    gsq = cellwise_grad_sq(g, v)
    assert np.all(gsq >= 0.0)
    exact = (np.pi * np.sin(np.pi * x)) ** 2
    assert np.abs(gsq - exact)[3:-3].max() < 0.05


def test_field_text_round_trip(tmp_path):
    g = hy.Grid.box([3, 4], [1.0, 2.0])
    rng = np.random.default_rng(7)
    v = rng.normal(size=g.shape)
    path = tmp_path / "field.txt"
    write_field_text(path, g, v)
    g2, v2 = read_field_text(path)
    assert g2 == g
    assert np.array_equal(v, v2)


def test_field_csv_x_fastest(tmp_path):
    g = hy.Grid.box([2, 2])
    v = np.array([[0.0, 2.0], [1.0, 3.0]])  # value = ix + 2*iy
    path = tmp_path / "field.csv"
    write_field_csv(path, g, v)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "ix,iy,value"
    # x varies fastest in row order
    assert [ln.split(",")[:2] for ln in lines[1:]] == [
        ["0", "0"], ["1", "0"], ["0", "1"], ["1", "1"]]
    assert [float(ln.split(",")[2]) for ln in lines[1:]] == [0.0, 1.0, 2.0, 3.0]
