import pytest

from database import DatabaseManager


@pytest.fixture
def db(tmp_path):
    return DatabaseManager(str(tmp_path / 'runs.db'))


def test_record_and_read_run(db):
    norms = {('rho', 1): 1e-3, ('rho', 2): 2e-3}
    run_id = db.record_run('steady-vortex', 2, 'lpr', 1.0, 1.7, 49, 490, 1.0, 37, 12.5, norms, 0.0)
    assert run_id == 1
    assert db.get_runs() == [(1, 'steady-vortex', 2, 'lpr', 1.0, 1.7, 37)]
    assert db.get_error_norms(run_id) == norms


def test_runs_filtered_by_case(db):
    db.record_run('stokes', 1, 'tets', 0.2, 0.35, 120, 480, 1.0, 10, 1.0)
    db.record_run('explosion', 1, 'lpr', 0.1, 0.2, 900, 9000, 0.25, 80, 30.0, max_troubled_fraction=0.04)
    assert [r[1] for r in db.get_runs('explosion')] == ['explosion']
    assert db.get_error_norms(2) == {}


def test_degree_outside_range_is_not_recorded(db):
    assert db.record_run('stokes', 4, 'tets', 0.2, 0.35, 120, 480, 1.0, 10, 1.0) is None
    assert db.get_runs() == []


def test_studies(db):
    assert db.record_study('taylor-green', 2, 3, {('u', 1): 3.01, ('u', 2): 2.98, ('v', 1): None, ('v', 2): None})
    assert db.get_studies('taylor-green') == [(2, 3, 'u', 3.01, 2.98), (2, 3, 'v', None, None)]
    assert db.get_studies('stokes') == []


def test_reopen_keeps_history(tmp_path):
    path = str(tmp_path / 'runs.db')
    DatabaseManager(path).record_run('stokes', 1, 'tets', 0.2, 0.35, 120, 480, 1.0, 10, 1.0)
    assert len(DatabaseManager(path).get_runs()) == 1


def test_failed_insert_leaves_registry_writable(db):
    # p = 3 violates the error_norms check after the run row is inserted
    assert db.record_run('stokes', 1, 'tets', 0.2, 0.35, 120, 480, 1.0, 10, 1.0, {('v', 3): 0.1}) is None
    assert db.get_runs() == []

    writer = DatabaseManager(db.db_path, timeout=0.5)
    assert writer.record_run('stokes', 1, 'tets', 0.2, 0.35, 120, 480, 1.0, 10, 1.0, {('v', 2): 0.1}) is not None
    assert writer.record_study('stokes', 1, 2, {('v', 1): 2.0, ('v', 2): 2.0})
    assert len(db.get_runs('stokes')) == 1


def test_failed_study_is_rolled_back(db):
    assert not db.record_study('stokes', 1, 2, {(None, 1): 2.0})
    assert db.get_studies('stokes') == []
    assert db.record_study('stokes', 1, 2, {('v', 1): 2.0})
