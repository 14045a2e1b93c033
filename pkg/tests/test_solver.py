import csv
from dataclasses import replace

import numpy as np
import pytest

from config import RunConfig
from database import DatabaseManager
from errors import ConfigurationError
from physics import cons_to_prim, prim_to_cons
from solver import LIMITER_CSV_HEADER, NORMS_CSV_HEADER, compute_dt, run, stable_dt

FREE_STREAM = RunConfig(case='free-stream', degree=1, h=0.5, generator='tets', t_final=0.05, threads=1,
                        database=None)


def test_stable_dt():
    assert stable_dt(1.0, 0.0, 1.0, 1, 0.3) == pytest.approx(0.1)
    assert stable_dt(2.0, 0.0, 1.0, 1, 0.3) == pytest.approx(0.05)
    assert stable_dt(1.0, 1.0, 1.0, 1, 0.3) == pytest.approx(0.3 / 21.0)


def test_stable_dt_takes_the_smallest_cell():
    assert stable_dt([1.0, 1.0], [0.0, 0.0], [1.0, 0.5], 2, 0.5) == pytest.approx(0.05)


def test_compute_dt_free_stream(tet_disc):
    w = np.tile([1.0, 0.3, -0.2, 0.1, 1.0], (tet_disc.dofs.total, 1))
    lam = np.sqrt(0.14) + np.sqrt(1.4)
    expected = 0.3 * tet_disc.geom.h.min() / (3.0 * lam)
    assert compute_dt(prim_to_cons(w, tet_disc.gas), tet_disc, 0.3) == pytest.approx(expected)


def test_free_stream_preserved_on_jittered_lpr_mesh():
    config = replace(FREE_STREAM, generator='lpr', jitter=0.1, seed=7)
    result = run(config)
    assert result.steps > 0
    assert result.state.t == 0.05
    w = cons_to_prim(result.state.u, result.disc.gas)
    np.testing.assert_allclose(w, np.broadcast_to([1.0, 0.3, -0.2, 0.1, 1.0], w.shape), atol=1e-11)
    assert result.norms[('rho', 2)] < 1e-10
    assert result.max_troubled_fraction == 0.0


def test_zero_final_time_returns_interpolant():
    result = run(replace(FREE_STREAM, case='steady-vortex', h=5.0, t_final=0.0))
    assert result.steps == 0
    expected = prim_to_cons(result.case.initial(result.disc.dofs.coords), result.disc.gas)
    np.testing.assert_array_equal(result.state.u, expected)


def test_threads_match_serial():
    config = replace(FREE_STREAM, case='steady-vortex', h=5.0, t_final=0.05)
    serial = run(config)
    threaded = run(replace(config, threads=2))
    assert serial.steps == threaded.steps
    np.testing.assert_array_equal(serial.state.u, threaded.state.u)


def test_steady_vortex_short_run():
    result = run(replace(FREE_STREAM, case='steady-vortex', h=5.0, t_final=0.05))
    assert set(result.norms) == {('rho', 1), ('rho', 2)}
    assert all(np.isfinite(v) and v > 0.0 for v in result.norms.values())
    assert result.norm_lines()[0].startswith('L1(rho) = ')


def test_explosion_run_has_no_norms():
    result = run(replace(FREE_STREAM, case='explosion', t_final=0.01))
    assert result.norms == {}
    assert result.case.alpha0 == pytest.approx(1.5 * result.disc.pm.h_min)


def test_limiter_and_norms_csv(tmp_path):
    limiter_csv = tmp_path / 'limiter.csv'
    norms_csv = tmp_path / 'out' / 'norms.csv'
    run(replace(FREE_STREAM, limiter_csv=str(limiter_csv), csv_path=str(norms_csv)))

    with open(limiter_csv, newline='') as f:
        assert list(csv.reader(f)) == [LIMITER_CSV_HEADER]
    with open(norms_csv, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == NORMS_CSV_HEADER
    assert len(rows) == 2
    assert rows[1][:3] == ['free-stream', '1', 'tets']
    assert rows[1][8] == 'rho'


def test_vtk_snapshots(tmp_path):
    result = run(replace(FREE_STREAM, out_dir=str(tmp_path), vtk_every=1))
    files = sorted(p.name for p in tmp_path.iterdir())
    assert f"free-stream_P1_{result.steps:06d}.vtk" in files
    assert 'free-stream_P1_000001.vtk' in files


def test_run_is_recorded(tmp_path):
    db_path = str(tmp_path / 'runs.db')
    result = run(replace(FREE_STREAM, database=db_path))
    assert result.run_id is not None
    db = DatabaseManager(db_path)
    runs = db.get_runs('free-stream')
    assert len(runs) == 1
    assert runs[0][0] == result.run_id
    assert runs[0][6] == result.steps
    assert set(db.get_error_norms(result.run_id)) == {('rho', 1), ('rho', 2)}


def test_invalid_configuration_is_rejected():
    with pytest.raises(ConfigurationError):
        run(replace(FREE_STREAM, degree=4))
