import numpy as np
import pytest

import hydride as hy


@pytest.fixture(scope="session")
def curve():
    return hy.build_plateau_curve(0.25, 1.0, 1.0, 0.5)


@pytest.fixture(scope="session")
def cert(curve):
    return hy.certify_curve(curve, 1.0)


@pytest.fixture(scope="session")
def graph():
    return hy.MonotoneGraph.interval(1.0)


@pytest.fixture(scope="session")
def emap(curve, cert):
    return hy.InternalEnergyMap(curve=curve, record=cert)


def build_cfg(curve, cert, graph, cells, n_steps, t_final=0.5, **kw):
    grid = hy.Grid.box(cells)
    return hy.RunConfig(grid=grid, params=kw.pop("params", hy.ModelParams()),
                        curve=curve, certificate=cert, graph=graph,
                        n_steps=n_steps, t_final=t_final, **kw)


@pytest.fixture(scope="session")
def make_cfg(curve, cert, graph):
    def factory(cells, n_steps, t_final=0.5, **kw):
        return build_cfg(curve, cert, graph, cells, n_steps, t_final, **kw)
    return factory


def smooth_initial_data(grid):
    x = grid.meshgrid()
    wave = grid.new_field(1.0)
    for xd, L in zip(x, grid.lengths):
        wave *= np.cos(np.pi * xd / L)
    theta0 = 1.0 + 0.2 * wave
    chi0 = 0.5 + 0.15 * wave
    p0 = 1.5 + 0.3 * wave
    return theta0, chi0, p0


@pytest.fixture(scope="session")
def smooth_data():
    return smooth_initial_data
