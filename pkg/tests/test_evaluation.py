import dataclasses

import numpy as np
import pytest

from risdeploy.errors import InvalidInputError
from risdeploy.evaluation import (closure_report, demo_sensing_paths,
                                  explicit_sensing_crb, explicit_ue_snr)
from risdeploy.units import SPEED_OF_LIGHT, lin2db


def test_explicit_snr_positive_and_size_monotone(ctx_full, nm_result):
    region = ctx_full.regions[0]
    snr = explicit_ue_snr(ctx_full, nm_result, 0, region.covered_cells[0], 0)
    assert snr > 0
    # a larger panel (same geometry) collects more power toward its comm beam
    bigger = dataclasses.replace(
        nm_result,
        sizes=[dataclasses.replace(s, cells_per_side=s.cells_per_side + 20)
               for s in nm_result.sizes])
    snr_big = explicit_ue_snr(ctx_full, bigger, 0, region.covered_cells[0], 0)
    assert snr_big > snr


def test_explicit_crb_requires_sensing_mode(ctx_full, nm_result):
    comm = dataclasses.replace(ctx_full, mode="comm-only")
    with pytest.raises(InvalidInputError):
        explicit_sensing_crb(comm, nm_result, 0, 0)


def test_explicit_crb_improves_with_size(ctx_full, nm_result):
    crb = explicit_sensing_crb(ctx_full, nm_result, 0, 0)
    assert crb.range_crb > 0 and crb.velocity_crb > 0
    bigger = dataclasses.replace(
        nm_result,
        sizes=[dataclasses.replace(s, cells_per_side=s.cells_per_side + 20)
               for s in nm_result.sizes])
    crb_big = explicit_sensing_crb(ctx_full, bigger, 0, 0)
    assert crb_big.range_crb < crb.range_crb
    assert crb_big.velocity_crb < crb.velocity_crb


def test_closure_report_shapes_and_margins(ctx_full, nm_result):
    report = closure_report(ctx_full, nm_result, nm_result.step1)
    n = len(ctx_full.regions)
    m_u = len(ctx_full.uav_grid.centers)
    assert len(report.snr_db) == n
    assert report.crb_range.shape == (n, m_u)
    assert report.crb_velocity.shape == (n, m_u)
    assert np.all(np.isfinite(report.crb_range))
    # the sized deployment must satisfy the QoS it was sized for
    assert report.snr_margin_db > 0.0
    assert report.crb_range_margin_db > 0.0
    assert report.crb_velocity_margin_db > 0.0
    # the scaling model and the synthesis agree to within a few dB
    assert np.all(report.gain_gap_db < 3.0)
    # reported margin is consistent with the per-cell SNR table
    worst = min(float(np.min(s)) for s in report.snr_db)
    assert report.snr_margin_db == pytest.approx(
        worst - lin2db(ctx_full.thresholds.snr_threshold))


def test_closure_report_comm_only(demo_cfg):
    from risdeploy import cli

    ctx = cli.build_context(demo_cfg, "comm-only")
    result = cli.optimize(ctx, demo_cfg)
    report = closure_report(ctx, result, result.step1)
    assert report.snr_margin_db > 0.0
    assert np.isnan(report.crb_range_margin_db)
    assert np.all(np.isnan(report.crb_range))


def test_demo_sensing_paths_geometry(ctx_full, nm_result):
    uav = ctx_full.uav_grid.centers[0] + np.array([1.0, -2.0, 0.0])
    vel = np.array([4.0, -2.0, 0.0])
    paths = demo_sensing_paths(ctx_full, nm_result, uav, vel)
    assert len(paths) == len(ctx_full.regions) + 1
    bs = ctx_full.scene.bs_position
    d_bu = np.linalg.norm(uav - bs)
    assert paths[0].delay == pytest.approx(2 * d_bu / SPEED_OF_LIGHT)
    # direct Doppler: both legs see the radial velocity toward the BS
    u_bs = (uav - bs) / d_bu
    assert paths[0].doppler == pytest.approx(-2 * np.dot(vel, u_bs) / ctx_full.wavelength)
    for n, p in enumerate(paths[1:]):
        d_rn = np.linalg.norm(uav - nm_result.positions[n])
        d_bn = np.linalg.norm(nm_result.positions[n] - bs)
        assert p.delay == pytest.approx((d_rn + d_bn + d_bu) / SPEED_OF_LIGHT)
        assert p.index == n + 1
        assert abs(p.coeff) > 0
    # all paths are distinguishable in delay
    delays = [p.delay for p in paths]
    assert len(set(np.round(np.array(delays) * 1e9, 3))) == len(delays)


def test_stationary_target_has_zero_doppler(ctx_full, nm_result):
    uav = ctx_full.uav_grid.centers[0]
    paths = demo_sensing_paths(ctx_full, nm_result, uav, np.zeros(3))
    assert all(p.doppler == 0.0 for p in paths)
