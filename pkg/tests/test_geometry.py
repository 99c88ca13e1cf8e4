import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpp_speedlab.errors import ValidationError
from kpp_speedlab.geometry import BoundaryKind, CrossSection, cell_average, cell_integrate, make_grid


def test_periodic_nodes_are_cell_centres():
    cs = make_grid(BoundaryKind.CIRCLE_PERIODIC, 1.0, 4)
    assert np.allclose(cs.nodes, [0.125, 0.375, 0.625, 0.875], rtol=0, atol=1e-15)


def test_neumann_spacing():
    assert make_grid(BoundaryKind.INTERVAL_NEUMANN, 2.0, 8).h == 0.25


@pytest.mark.parametrize("n", [3, 0, -1, 4.5])
def test_too_few_cells_rejected(n):
    with pytest.raises(ValidationError):
        make_grid("periodic", 1.0, n)


@pytest.mark.parametrize("length", [0.0, -1.0, math.inf, math.nan])
def test_bad_length_rejected(length):
    with pytest.raises(ValidationError) as exc:
        make_grid("periodic", length, 8)
    assert exc.value.field == "length"


def test_boundary_aliases():
    assert BoundaryKind.parse("Neumann") is BoundaryKind.INTERVAL_NEUMANN
    assert BoundaryKind.parse("circle") is BoundaryKind.CIRCLE_PERIODIC
    with pytest.raises(ValidationError):
        BoundaryKind.parse("dirichlet")


def test_nodes_read_only():
    cs = make_grid("neumann", 1.0, 8)
    with pytest.raises(ValueError):
        cs.nodes[0] = 1.0


def test_cell_integrate_examples():
    cs10 = make_grid("periodic", 1.0, 10)
    assert cell_integrate(cs10, np.ones(10)) == pytest.approx(1.0, abs=1e-15)
    cs = make_grid("periodic", 1.0, 64)
    assert abs(cell_integrate(cs, np.cos(2 * np.pi * cs.nodes))) <= 1e-12
    assert cell_integrate(cs, cs.nodes) == pytest.approx(0.5, abs=1e-14)


def test_cell_integrate_rejects_wrong_length():
    with pytest.raises(ValidationError):
        cell_integrate(make_grid("periodic", 1.0, 8), np.ones(7))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 64).map(lambda m: 2 * m), st.data(), st.floats(0.5, 10.0))
def test_trig_modes_integrate_to_zero(n, data, length):
    k = data.draw(st.integers(1, n // 2 - 1))
    cs = make_grid("periodic", length, n)
    assert abs(cell_integrate(cs, np.cos(2 * np.pi * k * cs.nodes / length))) <= 1e-12 * length


def test_midpoint_rule_second_order():
    # exp(y) on [0, 1] is not periodic, so the midpoint rule shows its O(h^2) rate
    exact = math.e - 1.0
    errs = [abs(cell_integrate(make_grid("neumann", 1.0, n), np.exp(make_grid("neumann", 1.0, n).nodes)) - exact)
            for n in (16, 32, 64)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9


def test_periodic_smooth_function_refinement():
    # exp(sin(2 pi y)) is periodic and smooth: refinement changes are at least O(h^2) small
    vals = [cell_integrate(cs, np.exp(np.sin(2 * np.pi * cs.nodes)))
            for cs in (make_grid("periodic", 1.0, n) for n in (8, 16, 32))]
    assert abs(vals[1] - vals[2]) <= abs(vals[0] - vals[1]) / 4 + 1e-15


def test_cell_average():
    cs = make_grid("periodic", 2.0, 16)
    assert cell_average(cs, np.full(16, 3.0)) == pytest.approx(3.0)


def test_refined_keeps_kind_and_length():
    cs = CrossSection("neumann", 2.0, 8).refined(32)
    assert cs.kind is BoundaryKind.INTERVAL_NEUMANN and cs.length == 2.0 and cs.n == 32
