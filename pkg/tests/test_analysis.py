import csv
from types import SimpleNamespace

import numpy as np
import pytest

from analysis import (convergence_study, error_norms, fit_order, format_error_table, front_position,
                      interpolate_exact, line_cut, radial_profile, shell_statistics)
from cases import FreeStream, StokesFirstProblem
from config import RunConfig
from database import DatabaseManager
from dg import build_discretization
from errors import ConfigurationError, PositivityError
from mesh import build_mesh
from physics import GasParams, prim_to_cons


@pytest.fixture(scope='module')
def slab_disc():
    return build_discretization(build_mesh((0.0, 0.0, 0.0, 2.0, 1.0, 1.0), 1.0, 'tets'), 2, GasParams())


def test_exact_interpolant_has_zero_error(slab_disc):
    case = FreeStream(slab_disc.gas)
    norms = error_norms(interpolate_exact(case, 0.0, slab_disc), case, 0.0, slab_disc, 2, ('rho', 'u', 'p'))
    assert all(v == pytest.approx(0.0, abs=1e-14) for v in norms.values())


def test_constant_offset_norms(slab_disc):
    case = FreeStream(slab_disc.gas)
    w = case.exact(slab_disc.dofs.coords, 0.0)
    w[:, 0] += 0.01
    u = prim_to_cons(w, slab_disc.gas)
    assert error_norms(u, case, 0.0, slab_disc, 1)['rho'] == pytest.approx(0.02)
    assert error_norms(u, case, 0.0, slab_disc, 2)['rho'] == pytest.approx(0.01 * np.sqrt(2.0))


def test_error_norm_arguments(slab_disc):
    case = FreeStream(slab_disc.gas)
    u = interpolate_exact(case, 0.0, slab_disc)
    with pytest.raises(ConfigurationError):
        error_norms(u, case, 0.0, slab_disc, 3)
    with pytest.raises(ConfigurationError, match='Unknown field'):
        error_norms(u, case, 0.0, slab_disc, 2, ('entropy',))


def test_fit_order():
    h = [1.0, 0.5, 0.25]
    assert fit_order(h, [x ** 2 for x in h]) == pytest.approx(2.0)
    assert fit_order(h, [3.0 * x ** 4 for x in h]) == pytest.approx(4.0)
    assert fit_order(h, [1e-14, 3e-15, 0.0]) is None
    with pytest.raises(ConfigurationError):
        fit_order([1.0], [0.1])


def _fake_runner(orders, fail_at=None):
    calls = []

    def runner(config):
        calls.append(config)
        if fail_at is not None and len(calls) == fail_at:
            raise PositivityError("Non-positive pressure", cell=0)
        h = config.h
        norms = {('u', 1): h ** orders[0], ('u', 2): h ** orders[0] / 2,
                 ('v', 1): h ** orders[1], ('v', 2): h ** orders[1] / 2}
        return SimpleNamespace(case=SimpleNamespace(error_fields=('u', 'v')), norms=norms, h_max=h,
                               n_cells=int(8 / h ** 3), n_dofs=int(80 / h ** 3))

    runner.calls = calls
    return runner


def test_convergence_study(tmp_path):
    template = RunConfig(case='taylor-green', degree=2, database=str(tmp_path / 'runs.db'), csv_path='ignored.csv')
    runner = _fake_runner((2.0, 3.0))
    report = convergence_study(template, [1.0, 0.75, 0.5625], str(tmp_path / 'study.csv'), runner)

    assert [c.h for c in runner.calls] == [1.0, 0.75, 0.5625]
    assert all(c.csv_path is None for c in runner.calls)
    assert report.orders[('u', 1)] == pytest.approx(2.0)
    assert report.orders[('v', 2)] == pytest.approx(3.0)

    with open(tmp_path / 'study.csv', newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ['case', 'degree', 'level']
    assert len(rows) == 1 + 3 * 2 + 2
    assert rows[-2][2] == 'order'
    assert rows[-2][8] == '2.0000'

    studies = DatabaseManager(template.database).get_studies('taylor-green')
    assert [(s[0], s[1], s[2]) for s in studies] == [(2, 3, 'u'), (2, 3, 'v')]
    assert studies[1][4] == pytest.approx(3.0)

    table = format_error_table(report)
    assert table.splitlines()[0] == 'taylor-green  P2'
    assert table.splitlines()[-1].lstrip().startswith('Order')


def test_failed_level_keeps_partial_results(tmp_path):
    template = RunConfig(case='taylor-green', degree=1, database=None)
    path = tmp_path / 'partial.csv'
    with pytest.raises(PositivityError):
        convergence_study(template, [1.0, 0.5, 0.25], str(path), _fake_runner((2.0, 2.0), fail_at=3))
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert len(rows) == 1 + 2 * 2
    assert {r[2] for r in rows[1:]} == {'0', '1'}


def test_convergence_needs_two_levels():
    with pytest.raises(ConfigurationError):
        convergence_study(RunConfig(database=None), [1.0], runner=_fake_runner((1.0, 1.0)))


def test_shell_statistics():
    r = np.array([0.05, 0.15, 0.15, 0.35, 0.95])
    values = np.array([1.0, 2.0, 4.0, 5.0, 7.0])
    centres, mean, rel = shell_statistics(r, values, n_shells=4, r_max=0.4)
    np.testing.assert_allclose(centres, [0.05, 0.15, 0.25, 0.35])
    assert mean[0] == pytest.approx(1.0)
    assert mean[1] == pytest.approx(3.0)
    assert np.isnan(mean[2])
    assert rel[1] == pytest.approx(1.0 / 3.0)
    assert rel[3] == pytest.approx(0.0)


def test_front_position():
    r = np.linspace(0.0, 1.0, 2001)
    values = np.where(r < 0.6, 1.0, 0.1)
    assert front_position(r, values, n_shells=50) == pytest.approx(0.6, abs=0.02)
    with pytest.raises(ConfigurationError):
        front_position(r, values, n_shells=50, r_range=(2.0, 3.0))


def test_radial_profile_is_sorted(slab_disc):
    case = FreeStream(slab_disc.gas)
    profile = radial_profile(interpolate_exact(case, 0.0, slab_disc), slab_disc)
    assert np.all(np.diff(profile.r) >= 0.0)
    np.testing.assert_allclose(profile.speed, np.sqrt(0.14))


def test_line_cut_on_stokes_profile():
    case = StokesFirstProblem()
    disc = build_discretization(build_mesh(case.domain, 0.2, 'tets'), 1, case.gas)
    x, v = line_cut(interpolate_exact(case, 0.0, disc), disc, 0.0, 0.0)
    assert np.all(np.diff(x) >= 0.0)
    assert x[0] == pytest.approx(0.0) and x[-1] == pytest.approx(1.0)
    np.testing.assert_allclose(v, case.exact(np.stack([x, 0 * x, 0 * x], axis=-1), 0.0)[:, 2])
