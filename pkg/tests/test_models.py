import math

import numpy as np
import pytest

from ricci_disk import models
from ricci_disk.geometry import BackgroundMetric, ConformalState, RadialGrid, geodesic_curvature, measures, scalar_curvature


def state(spec, n=256):
    return ConformalState(models.build(spec, RadialGrid(n)), np.zeros(n + 1))


def test_flat_disk():
    st = state(models.FlatDisk(1.0))
    A, L, _ = measures(st)
    assert geodesic_curvature(st) == pytest.approx(1.0, abs=1e-10)
    assert np.all(scalar_curvature(st) == 0.0)
    assert A == pytest.approx(math.pi, rel=1e-4)


def test_cigar_curvature_profile():
    st = state(models.TruncatedCigar(1.0, 3.0))
    R = scalar_curvature(st)
    s = st.bg.grid.x * 3.0
    assert R[0] == pytest.approx(4.0, abs=1e-10)
    np.testing.assert_allclose(R, 4.0 / np.cosh(s) ** 2, atol=1e-10)
    assert np.all(np.diff(R) < 0)
    H = geodesic_curvature(st)
    assert H == pytest.approx(1.0 / (np.cosh(3.0) ** 2 * np.tanh(3.0)), rel=1e-10)


def test_hemisphere_boundary():
    assert abs(geodesic_curvature(state(models.SphericalCap(1.0, math.pi / 2)))) < 1e-12


def test_zero_amplitude_perturbation_is_the_cap():
    g = RadialGrid(128)
    a = models.build(models.SphericalCap(1.3, 2.0), g)
    b = models.build(models.PerturbedCap(1.3, 2.0, 0.0, 3), g)
    np.testing.assert_allclose(b.w0, a.w0, rtol=0, atol=1e-15)
    np.testing.assert_allclose(b.R0, a.R0, rtol=0, atol=1e-14)
    assert b.H0 == pytest.approx(a.H0, abs=1e-14)


def test_perturbed_closed_form_curvature_matches_stencils():
    # the window is not odd in s, so the curvature has a kink at the pole;
    # compare away from it, where the stencils are second order
    errs = []
    for n in (128, 256, 512):
        bg = models.build(models.PerturbedCap(1.0, math.pi / 2, 0.05, 3), RadialGrid(n))
        raw = BackgroundMetric(bg.grid, bg.phi0, bg.w0)
        away = bg.grid.x >= 0.1
        errs.append(np.max(np.abs(raw.R0 - bg.R0)[away]))
        assert raw.H0 == pytest.approx(bg.H0, abs=10.0 / n**2)
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


@pytest.mark.parametrize(
    "bad",
    [
        models.SphericalCap(1.0, 1.5 * math.pi),
        models.SphericalCap(1.0, 0.0),
        models.SphericalCap(-1.0, 1.0),
        models.FlatDisk(0.0),
        models.TruncatedCigar(1.0, -1.0),
        models.PerturbedCap(1.0, 1.0, 0.05, 0),
    ],
)
def test_domain_violations(bad):
    with pytest.raises(ValueError):
        models.build(bad, RadialGrid(32))


def test_spec_dict_round_trip_and_aliases():
    for spec in (models.FlatDisk(2.0), models.SphericalCap(1.0, 1.0), models.TruncatedCigar(2.0, 5.0),
                 models.PerturbedCap(1.0, 2.0, 0.03, 4, 0.2)):
        assert models.spec_from_dict(models.spec_to_dict(spec)) == spec
    assert models.spec_from_dict({"model": "hemisphere"}) == models.SphericalCap(1.0, math.pi / 2)
    with pytest.raises(ValueError):
        models.spec_from_dict({"model": "torus"})
    with pytest.raises(ValueError):
        models.spec_from_dict({"model": "flat", "radius": 1.0})


def test_parameter_schema_lists_every_model():
    names = [rec["model"] for rec in models.parameter_schema()]
    assert names == list(models.MODEL_TYPES)


def test_exact_cap():
    e = models.exact_shrinking_cap(1.0, math.pi / 2, 0.0)
    assert (e.R, e.H, e.T) == (2.0, pytest.approx(0.0, abs=1e-16), 0.5)
    e = models.exact_shrinking_cap(1.0, math.pi / 2, 0.25)
    assert e.R == pytest.approx(4.0)
    assert e.A == pytest.approx(0.5 * 2 * math.pi)
    e = models.exact_shrinking_cap(1.0, math.pi / 3, 0.0)
    assert e.H == pytest.approx(1 / math.sqrt(3))
    with pytest.raises(ValueError):
        models.exact_shrinking_cap(1.0, 1.0, 0.5)


def test_exact_hemisphere_area_law():
    A0 = 2 * math.pi
    for t in np.linspace(0, 0.49, 7):
        assert models.exact_shrinking_cap(1.0, math.pi / 2, t).A == pytest.approx(A0 - 4 * math.pi * t)
