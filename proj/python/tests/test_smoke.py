import numpy as np
import pytest
import scipy.sparse as sp

import twogrid as tg


def test_grid_counts():
    g = tg.Grid([8, 6], [2, 2])
    assert g.dim == 2
    assert g.num_cells == 48
    assert g.num_faces == 7 * 6 + 8 * 5
    assert g.count_dofs().total == g.num_faces + g.num_cells


def test_large_dof_counts():
    assert tg.Grid([220, 60, 80], [22, 6, 8]).count_dofs().total == 4188400
    assert tg.Grid([64, 64, 64], [8, 8, 8]).count_dofs().total == 1036288


def test_bad_grid_raises_config_error():
    with pytest.raises(tg.ConfigError):
        tg.Grid([10, 10], [3, 3])


def test_operators_are_scipy_sparse():
    g = tg.Grid([4, 4], [2, 2])
    F = tg.assemble_source(g, point_sources=[(0, 1.0), (15, -1.0)])
    ops = tg.assemble_mixed(g, [1.0] * g.num_cells, F)
    assert sp.issparse(ops.A) and sp.issparse(ops.B)
    A = ops.A.toarray()
    assert np.allclose(A, A.T)
    assert np.all(np.linalg.eigvalsh(A) > 0)
    assert np.allclose(ops.B.toarray().sum(axis=0), 0.0)


def test_unbalanced_source_rejected():
    g = tg.Grid([4, 4], [2, 2])
    with pytest.raises(ValueError):
        tg.assemble_source(g, point_sources=[(0, 1.0)])


@pytest.mark.parametrize("kind", [tg.CoarseKind.RT0, tg.CoarseKind.MsFEM, tg.CoarseKind.GMsFEM])
def test_solve_matches_direct(kind):
    g = tg.Grid([12, 12], [3, 3])
    kappa = tg.channelized_field([12, 12, 1], 3.0, seed=4)
    F = tg.assemble_source(g, point_sources=[(0, 1.0), (g.num_cells - 1, -1.0)])
    ops = tg.assemble_mixed(g, kappa, F)
    basis = tg.build_coarse_space(kind, g, kappa, ops)
    settings = tg.SolverSettings()
    settings.rel_tol = 1e-10
    res = tg.solve(g, ops, basis, settings)
    assert res.report.converged
    assert res.divergence_residual < 1e-10

    K = sp.csr_matrix(tg.bordered_saddle(ops.A, ops.B))
    nv, npr = ops.A.shape[0], ops.B.shape[0]
    rhs = np.concatenate([np.zeros(nv), F, [0.0]])
    ref = sp.linalg.spsolve(K.tocsc(), rhs)[:nv]
    assert np.linalg.norm(res.velocity - ref) <= 1e-6 * np.linalg.norm(ref)


def test_preconditioner_output_divergence_free():
    g = tg.Grid([8, 8], [2, 2])
    kappa = tg.channelized_field([8, 8, 1], 2.0)
    F = tg.assemble_source(g, point_sources=[(0, 1.0), (63, -1.0)])
    ops = tg.assemble_mixed(g, kappa, F)
    basis = tg.build_coarse_space(tg.CoarseKind.GMsFEM, g, kappa, ops)
    prec = tg.TwoGridPreconditioner(g, ops, basis)
    r = np.random.default_rng(0).standard_normal(ops.A.shape[0])
    for z in (prec.smooth(r), prec.coarse_correct(r), prec.apply(r)):
        assert np.abs(ops.B @ z).max() <= 1e-10 * np.abs(z).max()


def test_fluid_examples():
    f = tg.FluidModel()
    assert tg.total_mobility(f, 0.0) == pytest.approx(0.2)
    assert tg.total_mobility(f, 0.5) == pytest.approx(0.30)
    value, slope = tg.fractional_flow(f, 0.5)
    assert value == pytest.approx(1 / 1.2)
    assert slope >= 0


def test_five_spot_balanced():
    wells = tg.WellConfig.five_spot(tg.Grid([10, 10], [2, 2])).wells
    assert sum(rate for _, rate in wells) == pytest.approx(0.0, abs=1e-14)


def test_impes_short_run():
    g = tg.Grid([12, 12], [3, 3])
    res = tg.impes_run(g, [1.0] * g.num_cells, steps=10, interval=5, dt=0.01)
    s = np.asarray(res.saturation)
    assert s.min() >= 0.0 and s.max() <= 1.0
    assert max(res.mass_balance_errors) < 1e-9
    assert np.all(np.diff(res.water_cut) >= -1e-12)


def test_raster_round_trip(tmp_path):
    values = [1.5, 2.0, 3.25, 4.0, 0.5, 7.0]
    path = tmp_path / "k.txt"
    tg.write_text_raster(path, values)
    assert tg.read_text_raster(path, [3, 2, 1]) == values
    with pytest.raises(tg.ConfigError):
        tg.read_text_raster(path, [4, 2, 1])
