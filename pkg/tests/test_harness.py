import numpy as np
import pytest

from core.errors import MeshMismatch
from core.fem import uniform_mesh
from core.harness import (
    FieldSolution,
    elementwise_average,
    experimental_orders,
    friction_averaging_gap,
    make_report,
    junction_fields,
    manufactured_fields,
    pairwise_error,
    periodicity_defect,
    run_flux_comparison,
    run_junction_manufactured,
    run_manufactured,
    run_network_study,
    network_scenario,
)
from core.timeloop import TimeIntegrator
from core.topology import build_graph


def constant_solution(n_elements, degree, p, m):
    mesh = uniform_mesh('e1', 1.0, n_elements)
    size = n_elements * degree + 1
    return FieldSolution(0.0, degree, {'e1': mesh}, {'e1': np.full(size, p)}, {'e1': np.full(size, m)})


def test_experimental_orders():
    orders = experimental_orders([0.4, 0.1, 0.025, 0.0])
    assert orders[0] is None
    assert orders[1] == pytest.approx(2.0)
    assert orders[2] == pytest.approx(2.0)
    assert orders[3] is None


def test_report_formats():
    report = make_report('linear', 1, [0.1, 0.05], [0.02, 0.005], {'final_time': '10'})
    assert report.eocs == [pytest.approx(2.0)]
    text = report.to_text()
    assert 'linear' in text and 'final_time: 10' in text and '2.00' in text
    rows = report.to_csv_rows()
    assert rows[0]['eoc'] == ''
    assert float(rows[1]['eoc']) == pytest.approx(2.0)
    assert float(rows[1]['e_h']) == 0.005


def test_pairwise_error():
    coarse = constant_solution(2, 2, 1.0, 0.5)
    assert pairwise_error(coarse, constant_solution(4, 2, 1.0, 0.5)) == pytest.approx(0.0, abs=1e-14)
    # constant offsets: sqrt(a * 0.3^2 + b * 0.4^2) on a unit pipe
    assert pairwise_error(coarse, constant_solution(4, 2, 1.3, 0.9), a=1.0, b=1.0) == pytest.approx(0.5)
    assert pairwise_error(coarse, constant_solution(4, 2, 1.3, 0.5), a=4.0) == pytest.approx(0.6)
    with pytest.raises(MeshMismatch):
        pairwise_error(constant_solution(3, 1, 1.0, 0.0), constant_solution(4, 1, 1.0, 0.0))


def test_manufactured_fields_solve_the_equations():
    a, b = 2.0, 0.5
    pressure, flux, friction, f, g = manufactured_fields(a, b)
    x = np.linspace(0.01, 0.99, 9)
    t, eps = 0.7, 1e-6
    dp_dt = (pressure(x, t + eps) - pressure(x, t - eps)) / (2 * eps)
    dm_dt = (flux(x, t + eps) - flux(x, t - eps)) / (2 * eps)
    dm_dx = (flux(x + eps, t) - flux(x - eps, t)) / (2 * eps)
    dp_dx = (pressure(x + eps, t) - pressure(x - eps, t)) / (2 * eps)
    np.testing.assert_allclose(a * dp_dt + dm_dx, f(x, t), atol=1e-7)
    np.testing.assert_allclose(b * dm_dt + dp_dx + friction(x) * flux(x, t), g(x, t), atol=1e-7)


def test_network_scenario_setup():
    scenario = network_scenario('linear', 0.05)
    assert scenario.dt == pytest.approx(0.05)
    assert scenario.integrator == 'midpoint'
    assert scenario.final_time == 10.0
    assert all(mesh.n_elements == 20 for mesh in scenario.meshes.values())
    assert scenario.boundary_pressures(0.5) == pytest.approx({'v1': 1.0, 'v6': 1.5})
    assert network_scenario('semilinear', 0.1).params.friction_ratio == pytest.approx(3.5)
    assert network_scenario('semilinear', 0.1).integrator == 'midpoint'
    quasilinear = network_scenario('quasilinear', 0.1)
    assert quasilinear.integrator == 'theta' and quasilinear.theta == pytest.approx(0.55)
    assert network_scenario('quasilinear', 0.1, integrator='midpoint').integrator == 'midpoint'


def test_quasilinear_network_reaches_final_time():
    integrator = TimeIntegrator(network_scenario('quasilinear', 0.1))
    trajectory = integrator.integrate()
    assert trajectory.times[-1] == pytest.approx(10.0)
    density, flux = integrator.model.split(trajectory.final_state.y)
    assert np.min(density) > 0.0 and np.all(np.isfinite(flux))


def test_network_study_linear_is_second_order():
    report = run_network_study('linear', levels=2, final_time=1.0)
    assert [row.h for row in report.rows] == [0.1, 0.05]
    assert report.eocs[-1] == pytest.approx(2.0, abs=0.2)


def test_manufactured_rate_for_linear_elements():
    report = run_manufactured(1, levels=3)
    assert len(report.rows) == 3
    assert report.errors[0] > report.errors[1] > report.errors[2]
    assert report.eocs[-1] == pytest.approx(2.0, abs=0.15)


def test_junction_fields_solve_the_equations():
    pressure, flux, f, g = junction_fields()
    x = np.linspace(0.01, 0.99, 9)
    t, eps = 0.7, 1e-6
    for edge in ('e1', 'e2', 'e3'):
        p, m = pressure[edge], flux[edge]
        dp_dt = (p(x, t + eps) - p(x, t - eps)) / (2 * eps)
        dm_dt = (m(x, t + eps) - m(x, t - eps)) / (2 * eps)
        dm_dx = (m(x + eps, t) - m(x - eps, t)) / (2 * eps)
        dp_dx = (p(x + eps, t) - p(x - eps, t)) / (2 * eps)
        np.testing.assert_allclose(dp_dt + dm_dx, f[edge](x, t), atol=1e-7)
        np.testing.assert_allclose(dm_dt + dp_dx + m(x, t), g[edge](x, t), atol=1e-7)


@pytest.mark.parametrize("t", [0.0, 0.4, 1.3])
def test_junction_fields_satisfy_the_coupling(t):
    pressure, flux, _, _ = junction_fields()
    graph = build_graph([('e1', 'v1', 'v2', 1.0), ('e2', 'v2', 'v3', 1.0), ('e3', 'v2', 'v4', 1.0)])
    ends = {'e1': 1.0, 'e2': 0.0, 'e3': 0.0}
    values = [pressure[edge](x, t) for edge, x in ends.items()]
    assert values == pytest.approx([1.0 + np.cos(t)] * 3)
    balance = sum(graph.incidence(edge, 'v2') * flux[edge](x, t) for edge, x in ends.items())
    assert balance == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("hybrid", [False, True])
def test_junction_keeps_second_order(hybrid):
    report = run_junction_manufactured(1, levels=4, hybrid=hybrid)
    assert report.errors == sorted(report.errors, reverse=True)
    assert all(eoc >= 1.9 for eoc in report.eocs[1:])


def test_elementwise_average():
    mesh = uniform_mesh('e', 2.0, 4)
    averaged = elementwise_average(lambda x: x, mesh)
    np.testing.assert_allclose(averaged(np.array([0.1, 0.6, 1.9])), [0.25, 0.75, 1.75])


def test_friction_averaging_is_exact_for_linear_elements():
    assert friction_averaging_gap(0.25, degree=1, final_time=0.5) < 1e-12


def test_threaded_runs_match_sequential():
    sequential = run_manufactured(1, levels=2, final_time=0.25, threads=1)
    threaded = run_manufactured(1, levels=2, final_time=0.25, threads=2)
    assert sequential.errors == threaded.errors


@pytest.mark.slow
def test_network_study_linear_full():
    report = run_network_study('linear', levels=5)
    assert 0.01936 / 2 <= report.errors[0] <= 0.01936 * 2
    assert all(eoc >= 1.9 for eoc in report.eocs)


@pytest.mark.slow
def test_network_study_semilinear_full():
    report = run_network_study('semilinear', levels=4)
    assert all(eoc >= 1.85 for eoc in report.eocs[-2:])


@pytest.mark.slow
def test_network_study_quasilinear_loses_order():
    report = run_network_study('quasilinear', levels=5)
    assert len(report.errors) == 5 and all(np.isfinite(report.errors))
    later = report.eocs[1:]
    assert all(finer < coarser for coarser, finer in zip(later, later[1:]))
    assert report.eocs[-1] <= 1.4


@pytest.mark.slow
@pytest.mark.parametrize("degree, tolerance", [(2, 0.15), (3, 0.2)])
def test_manufactured_rates_for_higher_degrees(degree, tolerance):
    report = run_manufactured(degree, levels=4)
    assert report.eocs[-1] == pytest.approx(degree + 1, abs=tolerance)


@pytest.mark.slow
def test_boundary_fluxes_become_periodic():
    trajectories = run_flux_comparison(['linear', 'semilinear', 'quasilinear'])
    for trajectory in trajectories.values():
        assert trajectory.times[-1] == pytest.approx(10.0)
        for vertex in ('v1', 'v6'):
            assert periodicity_defect(trajectory.times, trajectory.flux_series(vertex)) < 0.1
    linear = np.mean(np.abs(trajectories['linear'].flux_series('v1')))
    for kind in ('semilinear', 'quasilinear'):
        nonlinear = np.mean(np.abs(trajectories[kind].flux_series('v1')))
        assert 0.2 < nonlinear / linear < 5.0


def test_periodicity_defect():
    times = np.linspace(0.0, 10.0, 401)
    assert periodicity_defect(times, np.sin(np.pi * times)) < 1e-3
    assert periodicity_defect(times, times) > 0.1
