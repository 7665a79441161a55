import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from talenti_lab.errors import ContractError, ParameterError
from talenti_lab.fem import (
    Field,
    SolveParams,
    SourceSpec,
    build_dof_map,
    constrained_residual,
    energy_value,
    field_from_nodal,
    hole_flux,
    minimum_on_exterior,
    p1_power_integral,
    rayleigh_quotient,
    scaled_source,
    solve_eigen,
    solve_state,
    torsion,
    torsion_rayleigh_value,
    total_source,
)
from talenti_lab.mesh import (
    generate_annulus_mesh,
    generate_disk_mesh,
    generate_eccentric_annulus_mesh,
    parse_mesh_text,
    region_metrics,
)

from .test_mesh import SQUARE

UNIT = SourceSpec.constant(1.0)
ZERO = SourceSpec.constant(0.0)
SMALL = generate_eccentric_annulus_mesh(1.0, 0.4, 0.2, 4, 16)


def constant_field(mesh, c):
    dm = build_dof_map(mesh)
    return Field(mesh, dm, np.full(dm.free_count, float(c)))


# dof map

def test_disk_dofs_are_vertices():
    mesh = generate_disk_mesh(1.0, 4, 16)
    dm = build_dof_map(mesh)
    assert dm.free_count == mesh.n_vertices
    assert dm.hole_dofs == ()
    assert sorted(dm.node_to_dof) == list(range(mesh.n_vertices))


def test_annulus_dof_count(annulus):
    dm = build_dof_map(annulus)
    H = len(np.unique(annulus.triangles[annulus.regions == 1]))
    assert dm.free_count == annulus.n_vertices - H + 1
    assert len(dm.hole_dofs) == 1


def test_two_hole_indicator(two_hole):
    dm = build_dof_map(two_hole)
    assert len(dm.hole_dofs) == 2
    vals = np.zeros(dm.free_count)
    vals[dm.hole_dofs[0]] = 1.0
    nodal = Field(two_hole, dm, vals).nodal
    for r, expect in ((1, 1.0), (2, 0.0)):
        verts = np.unique(two_hole.triangles[two_hole.regions == r])
        assert np.all(nodal[verts] == expect)


def test_field_shape_is_checked(annulus):
    with pytest.raises(ContractError):
        Field(annulus, build_dof_map(annulus), np.zeros(3))


def test_nodal_values_must_be_constant_on_holes():
    nodal = np.arange(SMALL.n_vertices, dtype=float)
    with pytest.raises(ContractError):
        field_from_nodal(SMALL, nodal)


# energy

@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_zero_field_has_zero_energy(p):
    assert energy_value(constant_field(SMALL, 0.0), SolveParams(p, 2.0), UNIT, 0.0) == 0.0


@pytest.mark.parametrize("p, beta", [(2.0, 1.0), (3.0, 0.5), (1.5, 4.0)])
def test_constant_on_unit_square(p, beta):
    sq = parse_mesh_text(SQUARE)
    F = energy_value(constant_field(sq, 1.0), SolveParams(p, beta), ZERO, 0.0)
    assert F == pytest.approx(beta / p * 4.0, rel=1e-14)


def test_constant_on_disk_with_unit_source():
    mesh = generate_disk_mesh(1.0, 4, 16)
    rm = region_metrics(mesh)
    F = energy_value(constant_field(mesh, 1.0), SolveParams(2.0, 1.0), UNIT, 0.0)
    assert F == pytest.approx(0.5 * rm.perimeter_exterior - rm.area_total, rel=1e-13)


def test_negative_epsilon_rejected():
    with pytest.raises(ParameterError):
        energy_value(constant_field(SMALL, 1.0), SolveParams(), UNIT, -1.0)


@settings(max_examples=10)
@given(seed=st.integers(0, 2 ** 31), p=st.sampled_from([1.5, 2.0, 3.0, 4.5]))
def test_gradient_matches_finite_differences(seed, p):
    rng = np.random.default_rng(seed)
    dm = build_dof_map(SMALL)
    params = SolveParams(p, 1.3)
    x = 0.5 + rng.random(dm.free_count)
    g = constrained_residual(Field(SMALL, dm, x), params, UNIT, 1e-3)
    for _ in range(10):
        d = rng.standard_normal(dm.free_count)
        h = 1e-5
        Fp = energy_value(Field(SMALL, dm, x + h * d), params, UNIT, 1e-3)
        Fm = energy_value(Field(SMALL, dm, x - h * d), params, UNIT, 1e-3)
        fd = (Fp - Fm) / (2 * h)
        assert g @ d == pytest.approx(fd, rel=1e-5, abs=1e-9)


# state problem

def test_zero_source_gives_zero():
    u = solve_state(SMALL, SolveParams(3.0, 1.0), ZERO)
    assert np.all(u.nodal == 0)
    assert torsion(u) == 0.0
    assert hole_flux(u, u.params, ZERO, 1) == (0.0, 0.0)


def test_negative_source_rejected():
    with pytest.raises(ParameterError):
        SourceSpec.constant(-1.0)
    with pytest.raises(ParameterError):
        SourceSpec("per_triangle", values=(1.0, -1.0))


def test_disk_matches_closed_form():
    mesh = generate_disk_mesh(1.0, 16, 64)
    u = solve_state(mesh, SolveParams(2.0, 1.0), UNIT)
    r2 = (mesh.vertices ** 2).sum(axis=1)
    exact = 0.5 + (1 - r2) / 4
    assert np.max(np.abs(u.nodal - exact)) <= 0.01 * exact.max()


def test_annulus_state(annulus_state, annulus_profile):
    c = annulus_state.hole_constants[0]
    assert c == pytest.approx(0.6875, rel=0.01)
    r = np.hypot(*annulus_state.mesh.vertices.T)
    assert np.max(np.abs(annulus_state.nodal - annulus_profile(r))) <= 0.01 * annulus_profile.c_bar
    assert torsion(annulus_state) == pytest.approx(0.6171875 * math.pi, rel=0.01)


def test_annulus_state_converges():
    errs = []
    for k in (8, 16, 32):
        mesh = generate_annulus_mesh(1.0, 0.5, k, 4 * k)
        u = solve_state(mesh, SolveParams(2.0, 1.0), UNIT)
        r = np.hypot(*mesh.vertices.T)
        exact = np.where(r < 0.5 + 1e-12, 0.6875, 0.5 + (1 - r ** 2) / 4)
        errs.append(np.max(np.abs(u.nodal - exact)))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_positivity_and_boundary_minimum(eccentric, p):
    u = solve_state(eccentric, SolveParams(p, 1.0), UNIT)
    assert u.nodal.min() > 0
    assert minimum_on_exterior(u) <= u.nodal.min() + 1e-12
    assert np.all(u.hole_constants > minimum_on_exterior(u))


def test_weak_residual_vanishes(eccentric_state):
    params = eccentric_state.params
    load = -constrained_residual(constant_field(eccentric_state.mesh, 0.0), params, UNIT)
    res = constrained_residual(eccentric_state, params, UNIT)
    assert np.max(np.abs(res)) <= 1e-9 * np.max(np.abs(load))


def test_energy_decreases(eccentric_state_p3):
    stages = eccentric_state_p3.diagnostics["stages"]
    assert [s["epsilon"] for s in stages] == [0.1, 0.01, 0.001, 0.0001]
    for s in stages:
        e = np.asarray(s["energies"])
        assert np.all(np.diff(e) <= 1e-12 * np.abs(e).max())


def test_linearity_at_p2():
    params = SolveParams(2.0, 1.0)
    src = SourceSpec("radial_profile", radii=(0, 1), values=(2, 1))
    u = solve_state(SMALL, params, src)
    v = solve_state(SMALL, params, scaled_source(src, 3.5))
    np.testing.assert_allclose(v.nodal, 3.5 * u.nodal, rtol=1e-10)


# flux

def test_annulus_flux(annulus_state):
    flux, src = hole_flux(annulus_state, annulus_state.params, UNIT, 1)
    assert src == pytest.approx(math.pi / 4, rel=0.01)
    assert abs(flux - src) <= 1e-6 * (1 + abs(src))


def test_eccentric_flux_p3(eccentric_state_p3):
    flux, src = hole_flux(eccentric_state_p3, eccentric_state_p3.params, UNIT, 1)
    assert abs(flux - src) <= 1e-6 * (1 + abs(src))


def test_two_hole_flux(two_hole):
    src_spec = SourceSpec("radial_profile", radii=(0, 1), values=(1, 3), center=(0.2, 0.1))
    params = SolveParams(2.5, 0.7)
    u = solve_state(two_hole, params, src_spec)
    for i in (1, 2):
        flux, src = hole_flux(u, params, src_spec, i)
        assert src > 0
        assert abs(flux - src) <= 1e-6 * (1 + abs(src))


def test_flux_hole_index(annulus_state):
    with pytest.raises(ParameterError):
        hole_flux(annulus_state, annulus_state.params, UNIT, 2)
    with pytest.raises(ParameterError):
        hole_flux(annulus_state, annulus_state.params, UNIT, 0)


# torsion

def test_torsion_quotient_relation(eccentric_state_p3):
    # at the state the quotient collapses to (int w)^(p-1)
    T = torsion(eccentric_state_p3)
    assert torsion_rayleigh_value(eccentric_state_p3) == pytest.approx(T ** 2, rel=1e-6)


def test_power_integral_exact_for_integer_p():
    mesh = parse_mesh_text(SQUARE)
    # w = x on the unit square
    nodal = mesh.vertices[:, 0]
    for p in (1, 2, 3, 4):
        assert p1_power_integral(mesh, nodal, p) == pytest.approx(1 / (p + 1), rel=1e-14)
    # non-integer rule on a field bounded away from zero
    assert p1_power_integral(mesh, nodal + 1, 2.5) == pytest.approx((2 ** 3.5 - 1) / 3.5, rel=1e-12)


def test_total_source_constant(annulus):
    assert total_source(annulus, SourceSpec.constant(2.0)) == pytest.approx(2 * annulus.areas.sum())


# eigenvalues

def test_eigen_constant_function_bound(annulus):
    lam, phi = solve_eigen(annulus, SolveParams(2.0, 1.0))
    rm = region_metrics(annulus)
    assert lam <= rm.perimeter_exterior / rm.area_total
    assert lam == pytest.approx(rayleigh_quotient(phi), rel=1e-12)
    assert p1_power_integral(annulus, phi.nodal, 2) == pytest.approx(1.0, rel=1e-8)
    assert phi.nodal.min() >= 0
    hist = phi.diagnostics["lambda_history"]
    assert all(b <= a * (1 + 1e-8) for a, b in zip(hist, hist[1:]))


def test_disk_eigen_bound():
    lam, _ = solve_eigen(generate_disk_mesh(1.0, 8, 32), SolveParams(2.0, 1.0))
    assert lam <= 2.0


def test_eigen_seed_independence():
    mesh = generate_eccentric_annulus_mesh(1.0, 0.5, 0.3, 8, 32)
    params = SolveParams(2.0, 1.0)
    rng = np.random.default_rng(7)
    dm = build_dof_map(mesh)
    out = [solve_eigen(mesh, params, Field(mesh, dm, rng.random(dm.free_count) + 0.01)) for _ in range(2)]
    (l1, f1), (l2, f2) = out
    assert l1 == pytest.approx(l2, rel=1e-4)
    diff = p1_power_integral(mesh, f1.nodal - f2.nodal, 2) ** 0.5
    assert diff <= 1e-3


def test_eigen_seed_must_be_nonnegative(annulus):
    dm = build_dof_map(annulus)
    with pytest.raises(ParameterError):
        solve_eigen(annulus, SolveParams(), Field(annulus, dm, -np.ones(dm.free_count)))


@pytest.mark.parametrize(
    "kw",
    [dict(p=1.0), dict(p=11.0), dict(beta=0.0), dict(epsilon_schedule=(1e-2, 1e-1)), dict(epsilon_schedule=()),
     dict(ls_factor=1.0)],
)
def test_solve_params_validation(kw):
    with pytest.raises(ParameterError):
        SolveParams(**kw)
