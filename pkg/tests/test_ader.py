import numpy as np
import pytest

from ader import PredictorCoeffs, PredictorStats, predictor_solve, time_average, transform_fluxes
from basis import assemble_universal_matrices
from physics import GasParams, prim_to_cons, total_flux

FREE_STREAM = np.array([1.0, 0.3, -0.2, 0.1, 1.0])


def _cell_args(disc, cid):
    cm = disc.cells[cid]
    return cm, disc.geom.Jinv[cm.subtets], disc.geom.detJ[cm.subtets]


def test_identity_map_keeps_fluxes(gas):
    U = assemble_universal_matrices(1)
    q = np.tile(prim_to_cons(FREE_STREAM, gas), (1, 4, 1))
    F = total_flux(q, None, gas)
    Fstar = transform_fluxes(q, np.eye(3)[None], 1.0, U, gas)
    np.testing.assert_allclose(Fstar, np.swapaxes(F, 1, 2))
    halved = transform_fluxes(q, 0.5 * np.eye(3)[None], 1.0, U, gas)
    np.testing.assert_allclose(halved, 0.5 * Fstar)


def test_zero_step_replicates_state(lpr_disc, gas):
    cm, Jinv, detJ = _cell_args(lpr_disc, 0)
    u = np.tile(prim_to_cons(FREE_STREAM, gas), (cm.n_dofs, 1))
    pred = predictor_solve(cm, u, 0.0, Jinv, detJ, lpr_disc.U, gas)
    np.testing.assert_array_equal(pred.q, np.tile(u, (lpr_disc.U.n_time, 1)))
    assert pred.converged and pred.iterations == 0


@pytest.mark.parametrize('kind', ['tet', 'octahedron', 'central'])
def test_free_stream_predictor(lpr_disc, gas, kind):
    cid = next(c for c, cell in enumerate(lpr_disc.pm.cells) if cell.kind == kind)
    cm, Jinv, detJ = _cell_args(lpr_disc, cid)
    u = np.tile(prim_to_cons(FREE_STREAM, gas), (cm.n_dofs, 1))
    pred = predictor_solve(cm, u, 0.01, Jinv, detJ, lpr_disc.U, gas)
    assert pred.converged
    assert pred.iterations <= 2
    np.testing.assert_allclose(pred.q, np.tile(u, (lpr_disc.U.n_time, 1)), atol=1e-12)

    avg = time_average(pred, cm, Jinv, lpr_disc.U, gas)
    np.testing.assert_allclose(avg.q_bar, u, atol=1e-12)
    assert avg.grad is None


def test_time_average_of_linear_predictor(lpr_disc, gas):
    cm, Jinv, _ = _cell_args(lpr_disc, 0)
    U = lpr_disc.U
    base = np.tile(prim_to_cons(FREE_STREAM, gas), (cm.n_dofs, 1))
    slope = 0.05 * base
    tau = np.polynomial.legendre.leggauss(U.n_time)[0] * 0.5 + 0.5
    q = np.concatenate([base + slope * t for t in tau])
    avg = time_average(PredictorCoeffs(0, q, 1, 0.0, True), cm, Jinv, U, gas)
    np.testing.assert_allclose(avg.q_bar, base + 0.5 * slope, atol=1e-13)


def test_viscous_average_carries_gradients(lpr_disc):
    gas = GasParams(mu=1e-2)
    cm, Jinv, detJ = _cell_args(lpr_disc, 0)
    u = np.tile(prim_to_cons(FREE_STREAM, gas), (cm.n_dofs, 1))
    pred = predictor_solve(cm, u, 0.01, Jinv, detJ, lpr_disc.U, gas)
    avg = time_average(pred, cm, Jinv, lpr_disc.U, gas)
    assert avg.grad is not None
    np.testing.assert_allclose(avg.grad, 0.0, atol=1e-10)


def test_predictor_stats_merge():
    a = PredictorStats(3, 1e-13, 0)
    a.merge(PredictorStats(5, 1e-14, 2))
    assert (a.max_iterations, a.max_residual, a.not_converged) == (5, 1e-13, 2)
    a.add(PredictorCoeffs(0, np.zeros((1, 5)), 8, 1e-6, False))
    assert (a.max_iterations, a.not_converged) == (8, 3)
