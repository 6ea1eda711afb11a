import math

import numpy as np
import pytest

from ricci_disk import analysis, flow, models
from ricci_disk.geometry import ConformalState, RadialGrid, scalar_curvature


def state(spec, n=256, u=0.0, t=0.0):
    return ConformalState(models.build(spec, RadialGrid(n)), np.full(n + 1, u), t)


HEMI = models.SphericalCap(1.0, math.pi / 2)


def test_rescale_state_scales_curvature():
    st = state(models.PerturbedCap(1.0, 2.0, 0.05, 3), 128)
    sc = analysis.rescale_state(st, 4.0)
    np.testing.assert_allclose(scalar_curvature(sc), scalar_curvature(st) / 4.0, rtol=1e-12)
    with pytest.raises(ValueError):
        analysis.rescale_state(st, 0.0)


def test_round_cap_rescales_to_hemisphere_template():
    lv = analysis.rescale_level(state(models.SphericalCap(1.0, 1.2)))
    assert lv.lam == pytest.approx(2.0)
    assert lv.ratio == pytest.approx(1.0, abs=1e-10)
    assert lv.classification == "hemisphere"
    assert lv.hemisphere_K == pytest.approx(0.5, rel=1e-6)
    assert lv.hemisphere_dev < 1e-8
    assert lv.cigar_dev > 100 * lv.hemisphere_dev


def test_cigar_rescales_to_cigar_template():
    lv = analysis.rescale_level(state(models.TruncatedCigar(1.0, 3.0)))
    # R = 4 sech^2 s; scaling by 4 gives tanh(s/2) / (1/2)
    assert lv.lam == pytest.approx(4.0)
    assert lv.classification == "cigar"
    assert lv.cigar_c == pytest.approx(0.5, rel=1e-6)
    assert lv.cigar_dev < 1e-8


def test_nonpositive_curvature_is_indeterminate():
    s = np.linspace(0, 1, 20)
    R = np.linspace(1.0, -0.1, 20)
    assert analysis.compare_profiles(s, s, R) == (None, None, None, None)
    lv = analysis.rescale_level(state(models.FlatDisk(1.0), 64, t=0.0).with_u(0.3 * np.linspace(0, 1, 65) ** 2))
    assert lv.classification == analysis.INDETERMINATE
    assert lv.ratio == math.inf


def test_blowup_rescale_levels():
    cks = [(k, state(HEMI, 64, u=-k * math.log(2.0), t=0.5 - 0.5 / 2**k)) for k in range(4)]
    rec = analysis.blowup_rescale(cks)
    np.testing.assert_allclose(rec.lambdas, 2.0 * 2.0 ** np.arange(4), rtol=1e-12)
    np.testing.assert_allclose(rec.ratios, 1.0, atol=1e-10)
    assert [lv.level for lv in rec.levels] == [0, 1, 2, 3]
    with pytest.raises(ValueError, match="at least 3"):
        analysis.blowup_rescale(cks[:2])
    with pytest.raises(ValueError, match="strictly increasing"):
        analysis.blowup_rescale(cks[::-1])


def test_decreasing_tail():
    assert analysis.decreasing_tail_start([5, 4, 3, 2]) == 0
    assert analysis.decreasing_tail_start([1, 2, 3, 2, 1]) == 2
    assert analysis.decreasing_tail_start([1, 2, 3]) == 2
    assert analysis.eventually_decreasing([1.2, 1.5, 1.4, 1.3, 1.1, 1.05])
    assert not analysis.eventually_decreasing([1.0, 0.9, 0.8, 1.0, 1.1, 1.2])
    # too short a tail
    assert not analysis.eventually_decreasing([1, 2, 3, 4, 5, 3, 2])
    # ties within the tolerance count as non-increasing
    assert analysis.eventually_decreasing([3, 2, 2 + 1e-9, 1])


def test_kappa_on_flat_disk():
    rep = analysis.kappa_noncollapse(state(models.FlatDisk(1.0), 512), 0.25)
    assert not rep.empty
    # the disk about the center is the worst annulus: ratio pi
    assert rep.kappa == pytest.approx(math.pi, rel=1e-3)
    assert rep.admissible_centers.size == 513


def test_kappa_admissibility():
    st = state(HEMI, 128)
    # |R|/2 = 1 on the unit hemisphere
    assert analysis.kappa_noncollapse(st, 1.1).empty
    rep = analysis.kappa_noncollapse(st, 0.5)
    assert rep.kappa is not None and rep.kappa > 0
    rep = analysis.kappa_noncollapse(st, 0.5, centers=[0.0])
    assert rep.kappa == pytest.approx(2 * math.pi * (1 - math.cos(0.5)) / 0.25, rel=1e-4)
    with pytest.raises(ValueError):
        analysis.kappa_noncollapse(st, -1.0)


def test_loglog_slope():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    assert analysis.loglog_slope(x, 3 * x**-1.5) == pytest.approx(-1.5)


@pytest.fixture(scope="module")
def hemisphere_series():
    bg = models.build(HEMI, RadialGrid(128))
    return flow.run(bg, flow.Constant(0.0), flow.FlowConfig(n=128, t_max=0.45)).series


def test_normalized_hemisphere_is_static(hemisphere_series):
    ns = analysis.normalized_flow(hemisphere_series)
    np.testing.assert_allclose(ns.r_max, 2.0, rtol=1e-3)
    np.testing.assert_allclose(ns.area, ns.area[0], rtol=1e-12)
    np.testing.assert_allclose(ns.r_mean, 2.0, rtol=1e-3)
    assert np.all(ns.spread < 1e-3)
    np.testing.assert_allclose(ns.t_tilde, -0.5 * np.log(1 - 2 * ns.t), rtol=1e-3, atol=1e-6)


def test_normalized_csv(tmp_path, hemisphere_series):
    ns = analysis.normalized_flow(hemisphere_series)
    ns.to_csv(tmp_path / "n.csv")
    data = np.loadtxt(tmp_path / "n.csv", delimiter=",", skiprows=1)
    assert (tmp_path / "n.csv").read_text().splitlines()[0] == "t_tilde,r_max,r_min,h"
    np.testing.assert_array_equal(data[:, 0], ns.t_tilde)


def test_singular_time_from_run(hemisphere_series):
    est = analysis.singular_time_estimate(hemisphere_series)
    assert est.T == pytest.approx(0.5, abs=1e-3)
    assert not est.low_confidence


def test_singular_time_low_confidence():
    t = np.linspace(0, 1, 10)
    assert analysis.singular_time_estimate(t[:3], 1 / (1 - t[:3] / 2)).low_confidence
    est = analysis.singular_time_estimate(t, np.ones(10))
    assert est.low_confidence and est.T == math.inf
    est = analysis.singular_time_estimate(t, 1.0 / (4.0 - t))
    assert est.T == pytest.approx(4.0)
    assert est.low_confidence  # R_max grew by only a third
