import numpy as np
import pytest

from core.assembly import assemble, build_dofmap
from core.errors import NonpositiveCoefficient, NonpositiveDensity, VacuumState
from core.models import GasModel, ModelParams, density, effective_friction, pressure_law

NONLINEAR = ['semilinear', 'quasilinear']


def make_model(graph, meshes, params, degree=2):
    return GasModel(graph, meshes, build_dofmap(graph, meshes, degree), params)


def test_pressure_law():
    assert pressure_law(2.0, 3.0) == pytest.approx(18.0)
    np.testing.assert_allclose(pressure_law(np.array([1.0, 0.5])), [1.0, 0.5])
    assert density(18.0, 3.0) == pytest.approx(2.0)
    with pytest.raises(NonpositiveDensity):
        pressure_law(0.0)
    with pytest.raises(NonpositiveDensity):
        density(np.array([1.0, -1.0]))


def test_params_validation():
    assert ModelParams('Semilinear').kind == 'semilinear'
    assert ModelParams('semilinear', friction_factor=7.0, diameter=2.0).friction_ratio == pytest.approx(1.75)
    assert ModelParams('quasilinear').has_convection
    assert not ModelParams('linear').is_nonlinear
    assert ModelParams('linear').with_kind('semilinear').is_nonlinear
    # geometry is irrelevant for the linear kind
    ModelParams('linear', area=0.0)

    with pytest.raises(ValueError):
        ModelParams('isentropic')
    with pytest.raises(NonpositiveCoefficient):
        ModelParams('linear', a=0.0)
    with pytest.raises(NonpositiveCoefficient):
        ModelParams('semilinear', sound_speed=0.0)
    with pytest.raises(NonpositiveCoefficient):
        ModelParams('quasilinear', friction_factor=-1.0)


def test_linear_residual_vanishes_at_rest(seven_pipes, meshes_for):
    model = make_model(seven_pipes, meshes_for(seven_pipes, 2), ModelParams('linear'))
    y = np.zeros(model.n_state)
    np.testing.assert_allclose(model.spatial_residual(y, 0.0), 0.0)
    assert model.n_residual == 2 * model.dofmap.n_test
    assert model.is_linear


def test_linear_jacobian_is_constant(seven_pipes, meshes_for, rng):
    model = make_model(seven_pipes, meshes_for(seven_pipes, 2), ModelParams('linear', d=2.0))
    y1, y2 = rng.standard_normal((2, model.n_state))
    assert model.spatial_jacobian(y1, 0.0) is model.spatial_jacobian(y2, 1.0)
    np.testing.assert_allclose(model.spatial_residual(y1, 0.0), model.spatial_jacobian(y1, 0.0) @ y1)


def test_semilinear_friction_matches_effective_linear_friction(single_pipe, meshes_for):
    meshes = meshes_for(single_pipe, 3)
    params = ModelParams('semilinear', area=1.0, diameter=1.0, friction_factor=7.0, sound_speed=1.0)
    model = make_model(single_pipe, meshes, params)
    n = model.dofmap.n_broken
    y = np.concatenate([np.full(n, 2.0), np.full(n, 3.0)])

    d = effective_friction(params, 3.0, 2.0)
    assert d == pytest.approx(5.25)
    linear = assemble(single_pipe, meshes, model.dofmap, d=d)
    np.testing.assert_allclose(model.nonlinear_terms(y), linear.friction @ y[n:], rtol=1e-13, atol=1e-13)


def test_quasilinear_without_convection_is_semilinear(junction, meshes_for, rng):
    meshes = meshes_for(junction, 3)
    options = dict(area=0.8, diameter=0.5, friction_factor=0.3, sound_speed=1.5)
    plain = make_model(junction, meshes, ModelParams('quasilinear', convection=False, **options))
    semilinear = make_model(junction, meshes, ModelParams('semilinear', **options))
    assert not plain.params.has_convection
    n = plain.dofmap.n_broken
    for _ in range(5):
        y = np.concatenate([rng.uniform(1.0, 2.0, n), rng.standard_normal(n)])
        assert np.array_equal(plain.spatial_residual(y, 0.0), semilinear.spatial_residual(y, 0.0))
        difference = plain.spatial_jacobian(y, 0.0) - semilinear.spatial_jacobian(y, 0.0)
        assert difference.count_nonzero() == 0
    convected = make_model(junction, meshes, ModelParams('quasilinear', **options))
    assert not np.array_equal(convected.spatial_residual(y, 0.0), semilinear.spatial_residual(y, 0.0))


@pytest.mark.parametrize("kind", NONLINEAR)
def test_friction_vanishes_without_flow(kind, seven_pipes, meshes_for, rng):
    model = make_model(seven_pipes, meshes_for(seven_pipes, 2), ModelParams(kind, friction_factor=7.0))
    n = model.dofmap.n_broken
    y = np.concatenate([rng.uniform(0.5, 2.0, n), np.zeros(n)])
    np.testing.assert_array_equal(model.nonlinear_terms(y), 0.0)
    assert model.friction_dissipation(y) == 0.0


@pytest.mark.parametrize("kind", NONLINEAR)
def test_jacobian_matches_finite_differences(kind, junction, meshes_for, rng):
    params = ModelParams(kind, area=0.8, diameter=0.5, friction_factor=0.3, sound_speed=1.5,
                         g=lambda x, t: np.sin(x + t))
    model = make_model(junction, meshes_for(junction, 3), params, degree=2)
    n = model.dofmap.n_broken
    step = 1e-6
    for _ in range(10):
        y = np.concatenate([rng.uniform(1.0, 2.0, n), rng.uniform(0.2, 1.0, n) * rng.choice([-1.0, 1.0])])
        direction = rng.standard_normal(2 * n)
        analytic = model.spatial_jacobian(y, 0.3) @ direction
        numeric = (model.spatial_residual(y + step * direction, 0.3)
                   - model.spatial_residual(y - step * direction, 0.3)) / (2.0 * step)
        assert np.linalg.norm(analytic - numeric) <= 1e-6 * max(1.0, np.linalg.norm(analytic))


@pytest.mark.parametrize("kind", NONLINEAR)
def test_vacuum_is_detected(kind, single_pipe, meshes_for):
    model = make_model(single_pipe, meshes_for(single_pipe, 2), ModelParams(kind))
    n = model.dofmap.n_broken
    y = np.concatenate([np.full(n, 1.0), np.ones(n)])
    y[n // 2] = -0.5
    with pytest.raises(VacuumState):
        model.spatial_residual(y, 0.0)
    with pytest.raises(VacuumState):
        model.friction_dissipation(y)


def test_friction_dissipation_is_nonnegative(seven_pipes, meshes_for, rng):
    model = make_model(seven_pipes, meshes_for(seven_pipes, 2), ModelParams('semilinear'))
    n = model.dofmap.n_broken
    for _ in range(5):
        y = np.concatenate([rng.uniform(0.5, 2.0, n), rng.standard_normal(n)])
        assert model.friction_dissipation(y) >= 0.0


def test_boundary_values_use_the_pressure_law(single_pipe, meshes_for):
    meshes = meshes_for(single_pipe, 2)
    nonlinear = make_model(single_pipe, meshes, ModelParams('quasilinear', sound_speed=2.0))
    assert nonlinear.boundary_values({'v1': 4.0}) == {'v1': pytest.approx(1.0)}
    linear = make_model(single_pipe, meshes, ModelParams('linear'))
    assert linear.boundary_values({'v1': -4.0}) == {'v1': -4.0}
    with pytest.raises(NonpositiveDensity):
        nonlinear.boundary_values({'v1': 0.0})
