import numpy as np
import pytest

from conjugen.expr import EvalDomainError, evaluate, parse
from conjugen.grid import GridError, GridSpec
from conjugen.nullrep import GeneralQuadratic, Trilinear5
from conjugen.solver import (
    AnchorFailure,
    CellFailure,
    NoConvergence,
    SingularJacobian,
    SolveConfig,
    SolveResult,
    continue_over_grid,
    default_seeds,
    linear_f_oracle,
    newton_solve,
    system_residual,
)

Q3 = GeneralQuadratic(3)


def cubic_closed_form(point):
    """Solution of F = phi1^3/3 for n = 3 (checked symbolically)."""
    x, y, z = point
    phi1 = (x * x + y * y + z * z) / complex(x, -y)
    return np.array([phi1, z * phi1 / complex(x, -y)])


# ---------------------------------------------------------------- examples


def test_linear_example():
    res = newton_solve(parse("phi1", 2), Q3, [1, 1, 1])
    np.testing.assert_allclose(res.phi, [(1 - 1j) / 3, 1 / 3], atol=1e-15)
    assert res.residual_norm <= 1e-12


def test_origin_is_singular():
    with pytest.raises(SingularJacobian):
        newton_solve(parse("phi1", 2), Q3, [0, 0, 0])


def test_cubic_converges_quadratically_from_nearby_seed():
    point = np.array([1.3, 0.4, 0.9])
    exact = cubic_closed_form(point)
    config = SolveConfig(seed_phi=tuple(exact * (1 + 0.05 - 0.03j)))
    res = newton_solve(parse("(phi1^3)/3", 2), Q3, point, config)
    assert res.iterations <= 6
    assert res.residual_norm <= 1e-12
    np.testing.assert_allclose(res.phi, exact, rtol=1e-12)


def test_oracle_examples():
    np.testing.assert_allclose(linear_f_oracle([1, 0], Q3, [1, 1, 1]), [(1 - 1j) / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(linear_f_oracle([0, 1], Q3, [0, 0, 1]), [1, 0], atol=1e-15)
    with pytest.raises(SingularJacobian):
        linear_f_oracle([1, 0], Q3, [0, 0, 0])
    with pytest.raises(TypeError):
        linear_f_oracle(np.ones(6), Trilinear5(), np.ones(5))


def test_oracle_residual_n4():
    rng = np.random.default_rng(21)
    backend = GeneralQuadratic(4)
    for _ in range(20):
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        x = rng.uniform(-2, 2, 4)
        phi = linear_f_oracle(a, backend, x)
        assert np.max(np.abs(backend.x_system(phi, x) - a)) <= 1e-13 * max(1.0, np.abs(a).max())


def test_grid_examples():
    F = parse("phi1", 2)
    branch = continue_over_grid(F, Q3, GridSpec.uniform(3, 1, 2, 5))
    assert len(branch.solved) == 125
    for index in branch.solved:
        res = branch.result(index)
        np.testing.assert_allclose(res.phi, linear_f_oracle([1, 0], Q3, res.point), rtol=0, atol=1e-10)


def test_degenerate_grid_rejected():
    with pytest.raises(GridError):
        GridSpec.parse("1:2:1,1:2:5,1:2:5")


def test_origin_cell_fails_neighbours_solve():
    branch = continue_over_grid(parse("phi1", 2), Q3, GridSpec.uniform(3, -1, 1, 3))
    assert branch.failed == [(1, 1, 1)]
    assert branch.result((1, 1, 1)).kind == "SingularJacobian"
    assert len(branch.solved) == 26


# ---------------------------------------------------------------- errors and config


def test_no_convergence_carries_best_iterate():
    config = SolveConfig(max_iters=1, seed_phi=(3.0, -2.0))
    with pytest.raises(NoConvergence) as info:
        newton_solve(parse("exp(phi1) + phi2^4", 2), Q3, [1.2, 0.3, 0.8], config)
    best = info.value.best
    assert best.iterations == 1
    assert np.isfinite(best.residual_norm)


def test_domain_error_propagates():
    with pytest.raises(EvalDomainError):
        newton_solve(parse("log(phi1)", 2), Q3, [1, 1, 1], SolveConfig(seed_phi=(0, 1)))


def test_anchor_failure_when_nothing_solves():
    config = SolveConfig(max_iters=1, retries=0)
    with pytest.raises(AnchorFailure):
        continue_over_grid(parse("exp(phi1) + phi2^4", 2), Q3, GridSpec.uniform(3, 1, 2, 3), config)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(tol_residual=0)
    with pytest.raises(ValueError):
        SolveConfig(damping=1.0)
    with pytest.raises(ValueError):
        newton_solve(parse("phi1", 3), Q3, [1, 1, 1])


def test_default_seeds_reproducible():
    a = default_seeds(4, SolveConfig(rng_seed=5))
    b = default_seeds(4, SolveConfig(rng_seed=5))
    c = default_seeds(4, SolveConfig(rng_seed=6))
    assert len(a) == 9
    np.testing.assert_array_equal(a[0], np.ones(4))
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    assert not np.array_equal(a[1], c[1])


# ---------------------------------------------------------------- properties


@pytest.mark.parametrize("source", ["phi1^2 + phi1*phi2 - 0.5*phi2^2", "exp(phi1/4) + phi2^3", "sin(phi1) + 2*phi2"])
def test_residual_contract_by_reevaluation(source):
    F = parse(source, 2)
    branch = continue_over_grid(F, Q3, GridSpec.uniform(3, 1, 2, 4))
    assert branch.solved
    for index in branch.solved:
        res = branch.result(index)
        r = evaluate(F, res.phi).grad - Q3.x_system(res.phi, res.point)
        assert np.max(np.abs(r)) <= SolveConfig().tol_residual
        np.testing.assert_array_equal(system_residual(F, Q3, res.phi, res.point), r)


def test_linear_f_two_iterations_from_random_seeds():
    rng = np.random.default_rng(22)
    for n in (3, 4, 5):
        backend = GeneralQuadratic(n)
        for _ in range(10):
            a = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
            source = " + ".join(f"({float(a_j.real)!r} + {float(a_j.imag)!r}*i)*phi{j + 1}" for j, a_j in enumerate(a))
            x = rng.uniform(0.5, 2, n)
            seed = tuple(rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1))
            res = newton_solve(parse(source, n - 1), backend, x, SolveConfig(seed_phi=seed))
            assert res.iterations <= 2
            np.testing.assert_allclose(res.phi, linear_f_oracle(a, backend, x), rtol=0, atol=1e-10)


def _max_adjacent_jump(branch):
    phi = branch.phi_array()
    return max(float(np.nanmax(np.abs(np.diff(phi, axis=a)))) for a in range(branch.grid.ndim))


def test_branch_continuity_under_refinement():
    F = parse("phi1^3/3 + phi2", 2)
    jumps = [_max_adjacent_jump(continue_over_grid(F, Q3, GridSpec.uniform(3, 1, 2, c))) for c in (5, 9)]
    assert jumps[0] / jumps[1] >= 1.5


def test_sign_symmetry_for_quadratic_f():
    F = parse("phi1^2 + phi1*phi2 - 0.5*phi2^2", 2)
    for point in ([1.2, 0.3, 0.8], [1.9, 1.1, 1.4]):
        res = newton_solve(F, Q3, point)
        r = system_residual(F, Q3, -res.phi, np.array(point))
        assert np.max(np.abs(r)) <= 1e-12


def test_threads_give_identical_branch():
    F = parse("exp(phi1/4) + phi2^3", 2)
    grid = GridSpec.uniform(3, 1, 2, 5)
    seq = continue_over_grid(F, Q3, grid)
    par = continue_over_grid(F, Q3, grid, threads=4)
    assert list(seq.cells) == list(par.cells)
    for index in grid.indices():
        a, b = seq.result(index), par.result(index)
        assert type(a) is type(b)
        if isinstance(a, SolveResult):
            np.testing.assert_array_equal(a.phi, b.phi)
            assert a.iterations == b.iterations


def test_trilinear_cell_solves():
    F = parse("phi5*phi6 + phi1", 6)
    res = newton_solve(F, Trilinear5(), [1.5, 1.2, 1.7, 1.1, 1.3])
    assert res.residual_norm <= 1e-12


def test_failure_record_type():
    branch = continue_over_grid(parse("phi1", 2), Q3, GridSpec.uniform(3, -1, 1, 3))
    assert isinstance(branch.result((1, 1, 1)), CellFailure)
    assert np.isnan(branch.phi_array()[1, 1, 1]).all()
