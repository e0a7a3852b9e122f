import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pat2p.forward import (
    convergence_study,
    manufactured_problem,
    picard_solve,
    pressure_field,
    semilinear_residual,
)
from pat2p.grid import build_grid, discrete_l2_norm
from pat2p.phantoms import derive_optics, make_disk

GRID = build_grid(-1, 1, -1, 1, 41)


def test_linear_problem_converges_in_one_iteration():
    u, rep = picard_solve(GRID, 0.05, 0.3, 0.0, 1.0)
    assert rep.converged and rep.iterations == 1
    assert semilinear_residual(GRID, 0.05, 0.3, 0.0, u) < 1e-8


def test_zero_data_gives_zero_solution():
    u, rep = picard_solve(GRID, 1.0, 1.0, 1.0, 0.0, u0=0.0)
    assert rep.converged and np.all(u == 0.0)


def test_report_invariants():
    s, m = make_disk(GRID)
    D, _ = derive_optics(s)
    _, rep = picard_solve(GRID, D, s, m, 2.0, tol=1e-10)
    assert rep.converged and rep.final_update_norm <= 1e-10
    assert len(rep.contraction_ratios) == rep.iterations - 1
    assert rep.max_ratio_after_first < 1.0


def test_non_convergence_is_reported_not_raised():
    s, m = make_disk(GRID)
    D, _ = derive_optics(s)
    _, rep = picard_solve(GRID, D, s, 10 * m, 2.0, u0=0.0, tol=1e-14, max_iter=2)
    assert not rep.converged and rep.iterations == 2


def test_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        picard_solve(GRID, 1.0, -0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        picard_solve(GRID, 0.0, 0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        picard_solve(GRID, 1.0, 0.1, 0.0, 1.0, tol=0.0)


def test_manufactured_solution_first_levels():
    rows = convergence_study((25, 50))
    assert rows[0].order is None
    assert rows[1].order == pytest.approx(np.log(rows[0].err / rows[1].err) / np.log(2))
    assert rows[1].err < rows[0].err


def test_manufactured_residual_is_second_order():
    res = []
    for n in (20, 40, 80):
        grid, D, s, mu, g, f, exact = manufactured_problem(n)
        res.append(semilinear_residual(grid, D, s, mu, exact, f))
    assert 3.5 < res[0] / res[1] < 4.5 and 3.5 < res[1] / res[2] < 4.5


def test_residual_grows_linearly_with_perturbation():
    grid, D, s, mu, g, f, _ = manufactured_problem(20)
    u, _ = picard_solve(grid, D, s, mu, g, f)
    r = []
    for eps in (1e-4, 2e-4):
        w = u.copy()
        w[10, 10] += eps
        r.append(semilinear_residual(grid, D, s, mu, w, f))
    assert r[1] / r[0] == pytest.approx(2.0, rel=1e-3)


def test_fixed_point_residual_small():
    s, m = make_disk(GRID)
    D, _ = derive_optics(s)
    tol = 1e-10
    u, rep = picard_solve(GRID, D, s, m, 1.0, tol=tol)
    assert semilinear_residual(GRID, D, s, m, u) <= 10 * tol


def test_pressure_examples():
    assert np.allclose(pressure_field(1.0, 0.1, 0.01, np.ones(4)), 0.11)
    assert np.all(pressure_field(1.0, 0.1, 0.01, np.zeros(4)) == 0)
    assert np.all(pressure_field(2.0, 1.0, 1.0, np.full(4, 3.0)) == 24.0)
    with pytest.raises(ValueError):
        pressure_field(np.ones(3), np.ones(4), 1.0, 1.0)


def test_boundary_exact_and_uniqueness():
    s, m = make_disk(GRID)
    D, _ = derive_optics(s)
    u1, _ = picard_solve(GRID, D, s, m, 2.0, tol=1e-11)
    u2, _ = picard_solve(GRID, D, s, m, 2.0, u0=1.5, tol=1e-11)
    assert np.all(u1[GRID.boundary_mask] == 2.0)
    assert discrete_l2_norm(u1 - u2, GRID.h) <= 10 * 1e-11


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_positivity_and_bound(seed, gval):
    rng = np.random.default_rng(seed)
    g = build_grid(0, 1, 0, 1, 15)
    D = rng.uniform(0.05, 1.0, g.shape)
    s = rng.uniform(0.0, 2.0, g.shape)
    m = rng.uniform(0.0, 0.5, g.shape)
    u, rep = picard_solve(g, D, s, m, gval)
    assert rep.converged
    assert np.all(u >= -1e-12) and np.all(u <= gval + 1e-12)
