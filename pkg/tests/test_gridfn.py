import numpy as np
import pytest

from txnav.gridfn import Subgrid, ValueGrid, interpolate, interpolate_many, select_subgrid


def random_grid(rng, shape=(5, 4, 6)):
    axes = tuple(np.sort(rng.uniform(-10, 10, size=n)) for n in shape)
    theta = rng.standard_normal(shape)
    return ValueGrid(axes=axes, theta=theta)


def test_grid_point_queries_return_theta():
    rng = np.random.default_rng(0)
    grid = random_grid(rng)
    for idx in [(0, 0, 0), (2, 1, 3), (4, 3, 5)]:
        x = [grid.axes[m][idx[m]] for m in range(3)]
        assert interpolate(grid, x) == pytest.approx(grid.theta[idx], abs=1e-12)


def test_midpoint_1d():
    grid = ValueGrid(axes=(np.array([0.0, 1.0]),), theta=np.array([2.0, 4.0]))
    assert interpolate(grid, [0.5]) == pytest.approx(3.0)


def test_partition_of_unity():
    rng = np.random.default_rng(1)
    axes = tuple(np.sort(rng.uniform(-5, 5, size=n)) for n in (4, 3, 5))
    grid = ValueGrid(axes=axes, theta=np.full((4, 3, 5), 7.25))
    for _ in range(50):
        q = rng.uniform(-6, 6, size=3)
        assert interpolate(grid, q) == pytest.approx(7.25, abs=1e-12)


def test_reproduces_multilinear_functions():
    # f(x) = sum over subsets S of c_S * prod_{m in S} x_m is multilinear;
    # interpolation on theta = f(grid points) must reproduce it inside cells.
    rng = np.random.default_rng(2)
    axes = (np.array([0.0, 1.0, 3.0]), np.array([-1.0, 0.5, 2.0]), np.array([0.0, 2.0]))
    c = rng.uniform(-2, 2, size=8)

    def f(x, y, b):
        return (
            c[0] + c[1] * x + c[2] * y + c[3] * b
            + c[4] * x * y + c[5] * x * b + c[6] * y * b + c[7] * x * y * b
        )

    X, Y, B = np.meshgrid(*axes, indexing="ij")
    grid = ValueGrid(axes=axes, theta=f(X, Y, B))
    for _ in range(100):
        q = [rng.uniform(a[0], a[-1]) for a in axes]
        assert interpolate(grid, q) == pytest.approx(f(*q), abs=1e-10)


def test_clamps_outside_queries():
    grid = ValueGrid(axes=(np.array([0.0, 1.0]),), theta=np.array([5.0, -1.0]))
    assert interpolate(grid, [-3.0]) == 5.0
    assert interpolate(grid, [9.0]) == -1.0


def test_interpolate_many_matches_scalar():
    rng = np.random.default_rng(3)
    grid = random_grid(rng)
    queries = rng.uniform(-12, 12, size=(40, 3))
    vec = interpolate_many(grid, queries)
    for i, q in enumerate(queries):
        assert vec[i] == pytest.approx(interpolate(grid, q), abs=1e-12)


def test_select_subgrid_interior():
    # 31 points, state between points at indices 2 and 3 (0-based), r_dp=2
    axes = (np.linspace(0.0, 30.0, 31),)
    grid = ValueGrid.zeros(axes)
    sg = select_subgrid(grid, [2.5], r_dp=2)
    assert sg.lo == (0,) and sg.hi == (4,)  # five points, two to either side of index 2


def test_select_subgrid_below_first_point():
    grid = ValueGrid.zeros((np.linspace(0.0, 30.0, 31),))
    sg = select_subgrid(grid, [-4.0], r_dp=3)
    assert sg.lo == (0,) and sg.hi == (3,)


def test_select_subgrid_at_or_above_last_point():
    grid = ValueGrid.zeros((np.linspace(0.0, 30.0, 31),))
    for q in (30.0, 55.0):
        sg = select_subgrid(grid, [q], r_dp=3)
        assert sg.lo == (27,) and sg.hi == (30,)


def test_select_subgrid_exact_point_and_cardinality():
    grid = ValueGrid.zeros((np.linspace(0.0, 10.0, 11), np.linspace(0.0, 1.0, 5)))
    sg = select_subgrid(grid, [4.0, 0.3], r_dp=1)
    assert sg.lo == (3, 0) and sg.hi == (5, 2)
    assert sg.size() == 9
    assert sg.size() <= 3 ** 2


def test_subgrid_slices():
    sg = Subgrid(lo=(1, 0), hi=(3, 2))
    assert sg.slices() == (slice(1, 4), slice(0, 3))
