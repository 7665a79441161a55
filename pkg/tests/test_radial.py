import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from talenti_lab.errors import ParameterError
from talenti_lab.fem import SolveParams, SourceSpec, solve_eigen
from talenti_lab.mesh import generate_disk_mesh
from talenti_lab.radial import (
    FStarSpec,
    ball_volume,
    cumulative_f_star,
    fstar_from_source,
    gamma_n,
    radial_boundary_flux_integral,
    radial_distribution,
    solve_radial,
    solve_radial_eigen,
)

ONE = FStarSpec.constant(1.0)


@pytest.fixture(scope="module")
def golden():
    return solve_radial(2, 2.0, 1.0, 1.0, 0.5, ONE)


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
    assert gamma_n(2, 2.0) == pytest.approx(4 * math.pi)


def test_cumulative_f_star():
    assert cumulative_f_star(ONE, 0.7) == 0.7
    assert cumulative_f_star(FStarSpec.constant(0.0), 0.7) == 0.0
    lin = FStarSpec("table", s=(0, 1), values=(2, 0))
    assert cumulative_f_star(lin, 0.5) == pytest.approx(0.75, rel=1e-15)
    with pytest.raises(ParameterError):
        cumulative_f_star(lin, 1.5)
    with pytest.raises(ParameterError):
        cumulative_f_star(lin, -0.1)


@pytest.mark.parametrize(
    "kw",
    [dict(kind="table", s=(0, 1), values=(0, 1)), dict(kind="table", s=(0.1, 1), values=(1, 0)),
     dict(kind="constant", value=-1.0), dict(kind="bogus")],
)
def test_fstar_validation(kw):
    with pytest.raises(ParameterError):
        FStarSpec(**kw)


def test_golden_profile(golden):
    assert golden.v_boundary == 0.5
    assert golden.c_bar == pytest.approx(0.6875, abs=1e-10)
    r = np.linspace(0.5, 1.0, 101)
    np.testing.assert_allclose(golden(r), 0.5 + (1 - r ** 2) / 4, atol=1e-12)
    assert golden(0.2) == golden.c_bar


def test_golden_distribution(golden):
    phi = radial_distribution(golden)
    assert phi.integral() == pytest.approx(0.6171875 * math.pi, abs=1e-8)
    t = np.linspace(0.5, 0.6874, 200)
    np.testing.assert_allclose(phi(t), math.pi * (3 - 4 * t), rtol=1e-12)
    assert phi(0.3) == pytest.approx(math.pi, rel=1e-15)
    assert phi(0.6875 - 1e-9) == pytest.approx(math.pi / 4, rel=1e-6)
    assert phi(0.6876) == 0.0


def test_dirichlet_limit():
    prof = solve_radial(2, 2.0, 1e6, 1.0, 0.5, ONE)
    assert prof.v_boundary == pytest.approx(0.0, abs=1e-6)
    assert prof.c_bar == pytest.approx(0.1875, abs=1e-6)


def test_zero_source():
    prof = solve_radial(2, 3.0, 1.0, 1.0, 0.5, FStarSpec.constant(0.0))
    assert np.all(prof.v == 0)
    assert prof.c_bar == 0.0
    assert radial_distribution(prof).integral() == 0.0


@pytest.mark.parametrize("n, p", [(2, 1.5), (2, 3.0), (3, 2.0), (3, 4.0), (4, 1.2)])
def test_robin_and_flux_identities(n, p):
    beta, R0, R1 = 0.7, 1.3, 0.4
    src = FStarSpec("table", s=(0, 0.5, 2.0), values=(3, 1, 0.5), measure=ball_volume(n) * R0 ** n)
    prof = solve_radial(n, p, beta, R0, R1, src)
    w = ball_volume(n)
    assert prof.slope(R0) ** (p - 1) == pytest.approx(beta * prof.v_boundary ** (p - 1), rel=1e-10)
    lhs = n * w * R1 ** (n - 1) * prof.slope(R1) ** (p - 1)
    assert lhs == pytest.approx(cumulative_f_star(src, w * R1 ** n), rel=1e-10)
    assert np.all(np.diff(prof.v) < 0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
def test_level_set_equality(p):
    prof = solve_radial(2, p, 1.0, 1.0, 0.5, ONE)
    phi = radial_distribution(prof)
    t = np.linspace(prof.v_m, prof.c_bar, 202)[1:-1]
    mu = phi(t)
    lhs = gamma_n(2, p) * mu ** ((1 - 1 / 2) * p / (p - 1))
    rhs = cumulative_f_star(ONE, mu) ** (1 / (p - 1)) * -phi.derivative(t)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-4)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_boundary_identity(p):
    beta = 2.0
    prof = solve_radial(3, p, beta, 1.0, 0.3, ONE)
    a = radial_boundary_flux_integral(prof)
    assert a == pytest.approx(prof.perimeter * prof.v_boundary ** (p - 1) / p, rel=1e-8)
    assert a == pytest.approx(prof.perimeter * prof.slope(1.0) ** (p - 1) / (p * beta), rel=1e-8)


@settings(max_examples=15)
@given(p=st.floats(1.2, 6.0), b=st.floats(0.1, 5.0), factor=st.floats(1.1, 4.0))
def test_increasing_beta_decreases_profile(p, b, factor):
    lo = solve_radial(2, p, b, 1.0, 0.4, ONE, grid=256)
    hi = solve_radial(2, p, b * factor, 1.0, 0.4, ONE, grid=256)
    assert np.all(hi.v < lo.v)


def test_fstar_from_constant_source(annulus):
    fs = fstar_from_source(annulus, SourceSpec.constant(2.0))
    assert fs.is_constant and fs.value == 2.0


def test_fstar_from_radial_source(annulus):
    src = SourceSpec("radial_profile", radii=(0, 1), values=(3, 1))
    fs = fstar_from_source(annulus, src)
    assert cumulative_f_star(fs, fs.measure) == pytest.approx(
        float((annulus.areas / 3) @ src.midpoint_values(annulus).sum(axis=1)), rel=1e-12)
    s = np.linspace(0, fs.measure, 500)
    assert np.all(np.diff(fs(s)) <= 0)


def test_eigen_constant_bound():
    res = solve_radial_eigen(2, 2.0, 1.0, 1.0, 0.5, grid=400)
    assert res.lam <= 2.0
    res3 = solve_radial_eigen(3, 3.0, 0.5, 2.0, 0.5, grid=400)
    assert res3.lam <= 0.5 * 3 / 2.0


def test_disk_eigen_against_bessel():
    # k J1(k) = beta J0(k) with beta = 1 gives k^2 = 1.5769927...
    from scipy.optimize import brentq
    from scipy.special import j0, j1

    k = brentq(lambda k: k * j1(k) - j0(k), 0.5, 2.0)
    res = solve_radial_eigen(2, 2.0, 1.0, 1.0, 0.0, grid=2000)
    assert res.lam == pytest.approx(k * k, rel=1e-5)


def test_disk_eigen_against_fem():
    lam_fem, _ = solve_eigen(generate_disk_mesh(1.0, 16, 64), SolveParams(2.0, 1.0))
    lam = solve_radial_eigen(2, 2.0, 1.0, 1.0, 0.0).lam
    assert lam_fem == pytest.approx(lam, rel=0.02)


def test_annulus_eigen_self_convergence():
    lams = [solve_radial_eigen(2, 2.0, 1.0, 1.0, 0.5, grid=g).lam for g in (101, 201, 401)]
    d1, d2 = abs(lams[1] - lams[0]), abs(lams[2] - lams[1])
    assert d2 <= 0.5 * d1


def test_annulus_eigen_against_fem(annulus):
    lam_fem, _ = solve_eigen(annulus, SolveParams(2.0, 1.0))
    assert lam_fem == pytest.approx(solve_radial_eigen(2, 2.0, 1.0, 1.0, 0.5).lam, rel=0.02)


@pytest.mark.parametrize("args", [(1, 2.0, 1.0, 1.0, 0.5), (2, 1.0, 1.0, 1.0, 0.5), (2, 2.0, 0.0, 1.0, 0.5),
                                  (2, 2.0, 1.0, 1.0, 1.0)])
def test_bad_radial_arguments(args):
    with pytest.raises(ParameterError):
        solve_radial(*args, ONE)
