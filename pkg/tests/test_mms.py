import math
from dataclasses import replace

import numpy as np
import pytest

import hydride as hy
from hydride.errors import MMSDomainError
from hydride.mms import (ManufacturedCase, builtin_case, mms_run,
                         spatial_order_study, temporal_order_study,
                         trig1d_spatial, trig1d_temporal, trig2d_spatial)


def base_cfg(make_cfg, dim=1):
    return make_cfg([8] * dim, 4, t_final=0.25)


def test_stationary_fields_reproduced_to_solver_tol(make_cfg):
    case = trig1d_spatial()
    cfg = replace(base_cfg(make_cfg), grid=hy.Grid.box([24]), n_steps=4)
    res = mms_run(case, cfg, spatial_exact=False)
    # discrete-residual forcing on time-constant fields: exact reproduction
    for var in ("theta", "chi", "p"):
        assert res.errors[var] < 1e-8, var


def test_spatial_order_second(make_cfg):
    cfg = base_cfg(make_cfg)
    errs, orders = spatial_order_study(trig1d_spatial(), cfg, [16, 32, 64])
    assert all(e > 0 for e in errs)
    assert min(orders) > 1.9, (errs, orders)


def test_spatial_order_second_2d(make_cfg):
    cfg = base_cfg(make_cfg, dim=2)
    errs, orders = spatial_order_study(trig2d_spatial(), cfg, [8, 16, 32])
    assert min(orders) > 1.9, (errs, orders)


def test_temporal_order_first(make_cfg):
    cfg = base_cfg(make_cfg)
    errs, orders = temporal_order_study(trig1d_temporal(), cfg, cells=48,
                                        n_list=[8, 16, 32])
    for var in ("theta", "chi", "p"):
        assert min(orders[var]) > 0.9, (var, errs[var], orders[var])
        # halving tau roughly halves the error
        assert errs[var][0] / errs[var][1] == pytest.approx(2.0, rel=0.3)


def test_mms_rejects_constrained_phase(make_cfg):
    case = trig1d_temporal()
    bad = ManufacturedCase(
        name="touching", dim=1,
        theta=case.theta, p=case.p, theta_t=case.theta_t, p_t=case.p_t,
        chi=lambda x, t: 0.5 + 0.55 * np.cos(math.pi * x[0]),
        chi_t=lambda x, t: np.zeros_like(x[0]))
    cfg = replace(base_cfg(make_cfg), grid=hy.Grid.box([16]))
    with pytest.raises(MMSDomainError):
        mms_run(bad, cfg)


def test_mms_rejects_nonpositive_pressure(make_cfg):
    case = trig1d_temporal()
    bad = ManufacturedCase(
        name="vacuum", dim=1,
        theta=case.theta, chi=case.chi, theta_t=case.theta_t,
        chi_t=case.chi_t,
        p=lambda x, t: 0.2 * np.cos(math.pi * x[0]),
        p_t=lambda x, t: np.zeros_like(x[0]))
    cfg = replace(base_cfg(make_cfg), grid=hy.Grid.box([16]))
    with pytest.raises(MMSDomainError):
        mms_run(bad, cfg)


def test_builtin_case_registry():
    spatial, temporal = builtin_case("trig1d")
    assert spatial().dim == 1 and temporal().dim == 1
    spatial2d, temporal2d = builtin_case("trig2d")
    assert spatial2d().dim == 2 and temporal2d is None
    with pytest.raises(KeyError):
        builtin_case("nope")


def test_mms_dimension_mismatch(make_cfg):
    cfg = base_cfg(make_cfg, dim=2)
    with pytest.raises(ValueError):
        mms_run(trig1d_spatial(), cfg)
